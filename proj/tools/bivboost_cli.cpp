#include "bivboost/cli.hpp"

int main(int argc, char** argv) { return bivboost::cli::run(argc, argv); }
