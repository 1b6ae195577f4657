#pragma once

#include "saw/attention.hpp"
#include "saw/bpe.hpp"
#include "saw/checkpoint.hpp"
#include "saw/config.hpp"
#include "saw/dataset.hpp"
#include "saw/error.hpp"
#include "saw/evaluate.hpp"
#include "saw/example.hpp"
#include "saw/grad_check.hpp"
#include "saw/gru.hpp"
#include "saw/model_io.hpp"
#include "saw/ops.hpp"
#include "saw/pipeline.hpp"
#include "saw/reader.hpp"
#include "saw/sweep.hpp"
#include "saw/synthetic.hpp"
#include "saw/tensor.hpp"
#include "saw/training.hpp"
#include "saw/utf8.hpp"
#include "saw/vocabulary.hpp"
