#include "nptad/run_config.hpp"

int main(int argc, char** argv) { return nptad::run_cli(argc, argv); }
