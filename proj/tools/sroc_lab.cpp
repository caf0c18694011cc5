#include "sroc/harness.hpp"

int main(int argc, char** argv) { return sroc::cli_main(argc, argv); }
