#include "s2cgan/cli.hpp"

int main(int argc, char** argv) { return s2cgan::cli_main(argc, argv); }
