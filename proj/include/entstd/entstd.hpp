#pragma once

// Everything except the remote provider client (entstd/provider.hpp), which
// pulls in the HTTP library.

#include "entstd/binary_io.hpp"
#include "entstd/checkpoint.hpp"
#include "entstd/corpus.hpp"
#include "entstd/distance.hpp"
#include "entstd/encoder.hpp"
#include "entstd/errors.hpp"
#include "entstd/eval.hpp"
#include "entstd/features.hpp"
#include "entstd/gradients.hpp"
#include "entstd/hash.hpp"
#include "entstd/index.hpp"
#include "entstd/mining.hpp"
#include "entstd/optimizer.hpp"
#include "entstd/synth.hpp"
#include "entstd/text.hpp"
#include "entstd/tfidf.hpp"
#include "entstd/trainer.hpp"
