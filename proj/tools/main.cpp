#include "commands.hpp"

int main(int argc, char** argv) { return prnu::cli::run(argc, argv); }
