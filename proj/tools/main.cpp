#include "cli.hpp"

int main(int argc, char** argv) { return sarrain::cli::run(argc, argv); }
