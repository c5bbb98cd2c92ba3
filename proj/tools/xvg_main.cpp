#include "xvg/cli.hpp"

int main(int argc, char** argv) { return xvg::cli::run(argc, argv); }
