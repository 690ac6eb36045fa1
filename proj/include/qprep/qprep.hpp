// qprep.hpp - everything at once
#pragma once

#include "cli.hpp"
#include "completeness.hpp"
#include "gns.hpp"
#include "io.hpp"
#include "micromaser.hpp"
#include "models.hpp"
#include "preparation.hpp"
#include "stationary.hpp"
#include "transition.hpp"
