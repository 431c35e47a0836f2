#include "krt/cli.hpp"

int main(int argc, char** argv) { return krt::cli::run(argc, argv); }
