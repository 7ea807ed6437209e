#pragma once

#include "errors.hpp"
#include "numerics.hpp"
#include "distributions.hpp"
#include "mechanism.hpp"
#include "search.hpp"
#include "coexistence.hpp"
#include "double_auction.hpp"
#include "welfare.hpp"
#include "competition.hpp"
#include "simulator.hpp"
#include "json_io.hpp"
