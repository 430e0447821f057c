#pragma once

#include "supck/align.hpp"
#include "supck/eval.hpp"
#include "supck/geometry.hpp"
#include "supck/io.hpp"
#include "supck/kpca.hpp"
#include "supck/matching.hpp"
#include "supck/measures.hpp"
#include "supck/pdb.hpp"
#include "supck/version.hpp"
