#include "mfcert/cli.hpp"

int main(int argc, char** argv) { return mfcert::cli::run(argc, argv); }
