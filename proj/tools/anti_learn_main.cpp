#include "antilearn/cli.hpp"

int main(int argc, char** argv) { return antilearn::cli::run(argc, argv); }
