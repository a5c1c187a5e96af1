#include "quartet/iocli.hpp"

int main(int argc, char** argv) { return quartet::iocli::cli_main(argc, argv); }
