#include "tubekit/cli.hpp"

int main(int argc, char** argv) { return tubekit::cli::run(argc, argv); }
