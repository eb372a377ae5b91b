#include "balans_cli.hpp"

int main(int argc, char** argv) {
    return balans::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
