#pragma once

#include "synlink/candidate_ranking.hpp"
#include "synlink/embedding_io.hpp"
#include "synlink/error.hpp"
#include "synlink/evaluation.hpp"
#include "synlink/lexicon.hpp"
#include "synlink/linear_map.hpp"
#include "synlink/pipeline.hpp"
#include "synlink/synset_embedding.hpp"
