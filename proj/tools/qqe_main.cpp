#include "qqe_cli.hpp"

int main(int argc, char** argv) { return qqe::cli::run(argc, argv); }
