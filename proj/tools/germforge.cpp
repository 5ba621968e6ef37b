#include "germforge/cli.hpp"

int main(int argc, char** argv) { return germforge::run_cli(argc, argv); }
