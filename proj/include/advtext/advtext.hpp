#pragma once

#include "advtext/article.hpp"
#include "advtext/blend.hpp"
#include "advtext/campaign.hpp"
#include "advtext/cassette.hpp"
#include "advtext/classify.hpp"
#include "advtext/embattack.hpp"
#include "advtext/errors.hpp"
#include "advtext/genclient.hpp"
#include "advtext/hash.hpp"
#include "advtext/http.hpp"
#include "advtext/lexsub.hpp"
#include "advtext/metrics.hpp"
#include "advtext/rng.hpp"
#include "advtext/spectrum.hpp"
#include "advtext/text.hpp"
#include "advtext/vocab.hpp"
