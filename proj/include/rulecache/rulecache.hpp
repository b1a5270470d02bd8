#pragma once

#include "rulecache/core_model.hpp"
#include "rulecache/engine.hpp"
#include "rulecache/experiment.hpp"
#include "rulecache/fdrc.hpp"
#include "rulecache/policy.hpp"
#include "rulecache/scenario.hpp"
#include "rulecache/traffic.hpp"
