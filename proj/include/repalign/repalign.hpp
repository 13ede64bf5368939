#pragma once

#include "repalign/alignment.hpp"
#include "repalign/base64.hpp"
#include "repalign/bench_io.hpp"
#include "repalign/dataset.hpp"
#include "repalign/digest.hpp"
#include "repalign/errors.hpp"
#include "repalign/gradients.hpp"
#include "repalign/matrix.hpp"
#include "repalign/model_io.hpp"
#include "repalign/models.hpp"
#include "repalign/ramx.hpp"
#include "repalign/report_json.hpp"
#include "repalign/rng.hpp"
#include "repalign/selection.hpp"
#include "repalign/svd.hpp"
#include "repalign/synth.hpp"
#include "repalign/training.hpp"
