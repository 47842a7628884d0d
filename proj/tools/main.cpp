#include "sdiq/cli.hpp"

int main(int argc, char** argv) { return sdiq::cli::run(argc, argv); }
