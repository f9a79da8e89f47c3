#include "gridse/filters.hpp"
