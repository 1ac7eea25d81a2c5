#include <iostream>

#include "icw/acceptance.hpp"

int main() { return icw::run_acceptance(std::cout) ? 0 : 1; }
