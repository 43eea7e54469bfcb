#pragma once

#include "shiftlab/audit.hpp"
#include "shiftlab/binning.hpp"
#include "shiftlab/dictionary.hpp"
#include "shiftlab/evaluate.hpp"
#include "shiftlab/io.hpp"
#include "shiftlab/label_set.hpp"
#include "shiftlab/labeling.hpp"
#include "shiftlab/matcher.hpp"
#include "shiftlab/metadata.hpp"
#include "shiftlab/parallel.hpp"
#include "shiftlab/pipeline.hpp"
#include "shiftlab/prediction.hpp"
#include "shiftlab/random.hpp"
#include "shiftlab/rebalance.hpp"
#include "shiftlab/record.hpp"
#include "shiftlab/robustness.hpp"
#include "shiftlab/series.hpp"
#include "shiftlab/text.hpp"
#include "shiftlab/version.hpp"
