#include "mwo/service/cli.hpp"

int main(int argc, char** argv) { return mwo::service::run_cli(argc, argv); }
