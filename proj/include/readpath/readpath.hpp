#pragma once

#include "readpath/corpus.hpp"
#include "readpath/epochs.hpp"
#include "readpath/nullmodel.hpp"
#include "readpath/paths.hpp"
#include "readpath/surprise.hpp"
#include "readpath/topics.hpp"
