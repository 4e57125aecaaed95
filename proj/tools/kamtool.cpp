#include "kam/cli.hpp"

int main(int argc, char** argv) { return kam::cli::main_entry(argc, argv); }
