#ifndef ANTILEARN_IMAGE_IO_HPP
#define ANTILEARN_IMAGE_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace antilearn {

// 8-bit image, row-major H x W x C with C in {1, 3}.
struct ImageU8 {
  int h = 0, w = 0, c = 0;
  std::vector<uint8_t> v;
};

// Reads a PNG (8-bit gray or RGB; palette/alpha are expanded/stripped) or a
// binary PPM/PGM (P5/P6).
ImageU8 read_image(const std::string& path);

// P5 for single-channel, P6 for 3-channel.
void write_ppm(const std::string& path, const ImageU8& img);

}  // namespace antilearn

#endif
