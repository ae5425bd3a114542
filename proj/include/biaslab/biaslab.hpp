#pragma once

#include "biaslab/agreement.hpp"
#include "biaslab/annotation.hpp"
#include "biaslab/baseline.hpp"
#include "biaslab/corpus.hpp"
#include "biaslab/error.hpp"
#include "biaslab/evaluation.hpp"
#include "biaslab/game.hpp"
#include "biaslab/metrics.hpp"
#include "biaslab/model.hpp"
#include "biaslab/pipeline.hpp"
#include "biaslab/random.hpp"
#include "biaslab/service.hpp"
#include "biaslab/store.hpp"
#include "biaslab/synthetic.hpp"
#include "biaslab/textprep.hpp"
#include "biaslab/time.hpp"
#include "biaslab/types.hpp"
#include "biaslab/workbench.hpp"
