#include "crseg/cli.hpp"

int main(int argc, char** argv) { return crseg::cli::run(argc, argv); }
