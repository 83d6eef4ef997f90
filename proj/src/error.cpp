#include "tabprobe/error.hpp"
