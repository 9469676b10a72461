#include "cli_app.hpp"

int main(int argc, char** argv) { return codym::cli::run(argc, argv); }
