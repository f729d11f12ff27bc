#include "antilearn/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "antilearn/error.hpp"

namespace antilearn {

namespace {

ImageU8 read_png_file(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) raise(ErrorCode::IoFailure, "cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    raise(ErrorCode::Generic, "libpng init failed");
  }
  ImageU8 img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    raise(ErrorCode::IoFailure, "png decode failed: " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  png_set_expand(png);         // palette / low bit depth -> 8-bit
  png_set_strip_16(png);       // 16-bit -> 8-bit
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  img.h = static_cast<int>(png_get_image_height(png, info));
  img.w = static_cast<int>(png_get_image_width(png, info));
  int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    raise(ErrorCode::IoFailure, "unsupported png channel count in " + path);
  }
  img.c = channels;
  img.v.resize(static_cast<size_t>(img.h) * img.w * img.c);
  rows.resize(img.h);
  for (int y = 0; y < img.h; ++y)
    rows[y] = img.v.data() + static_cast<size_t>(y) * img.w * img.c;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

int next_ppm_token(std::istream& in) {
  // Skips whitespace and '#' comments, returns next integer.
  for (;;) {
    int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  return value;
}

ImageU8 read_ppm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoFailure, "cannot open " + path);
  char p, kind;
  in.get(p);
  in.get(kind);
  if (p != 'P' || (kind != '5' && kind != '6'))
    raise(ErrorCode::IoFailure, "unsupported pnm kind in " + path);
  ImageU8 img;
  img.c = kind == '5' ? 1 : 3;
  img.w = next_ppm_token(in);
  img.h = next_ppm_token(in);
  int maxval = next_ppm_token(in);
  if (img.w <= 0 || img.h <= 0 || maxval != 255)
    raise(ErrorCode::IoFailure, "only 8-bit pnm supported: " + path);
  in.get();  // single whitespace after maxval
  img.v.resize(static_cast<size_t>(img.h) * img.w * img.c);
  in.read(reinterpret_cast<char*>(img.v.data()), static_cast<std::streamsize>(img.v.size()));
  if (!in) raise(ErrorCode::IoFailure, "truncated pnm: " + path);
  return img;
}

}  // namespace

ImageU8 read_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) raise(ErrorCode::IoFailure, "cannot open " + path);
  unsigned char magic[2] = {0, 0};
  probe.read(reinterpret_cast<char*>(magic), 2);
  probe.close();
  if (magic[0] == 0x89 && magic[1] == 'P') return read_png_file(path);
  if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) return read_ppm_file(path);
  raise(ErrorCode::IoFailure, "unrecognized image format: " + path);
}

void write_ppm(const std::string& path, const ImageU8& img) {
  require(img.c == 1 || img.c == 3, ErrorCode::Generic, "ppm needs 1 or 3 channels");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoFailure, "cannot write " + path);
  out << (img.c == 1 ? "P5" : "P6") << "\n" << img.w << " " << img.h << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.v.data()),
            static_cast<std::streamsize>(img.v.size()));
  if (!out) raise(ErrorCode::IoFailure, "write failed: " + path);
}

}  // namespace antilearn
