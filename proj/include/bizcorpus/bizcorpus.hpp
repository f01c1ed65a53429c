#pragma once

#include "bizcorpus/bench.hpp"
#include "bizcorpus/curation.hpp"
#include "bizcorpus/dedup.hpp"
#include "bizcorpus/document.hpp"
#include "bizcorpus/errors.hpp"
#include "bizcorpus/hash.hpp"
#include "bizcorpus/jsonl.hpp"
#include "bizcorpus/lang_id.hpp"
#include "bizcorpus/mixture.hpp"
#include "bizcorpus/noise_filter.hpp"
#include "bizcorpus/parallel.hpp"
#include "bizcorpus/pipeline.hpp"
#include "bizcorpus/random.hpp"
#include "bizcorpus/stats.hpp"
#include "bizcorpus/tokenizer.hpp"
#include "bizcorpus/utf8.hpp"
#include "bizcorpus/wire.hpp"
