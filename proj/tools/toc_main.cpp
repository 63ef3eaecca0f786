#include "toc/cli.hpp"

int main(int argc, char** argv) { return toc::cli_main(argc, argv); }
