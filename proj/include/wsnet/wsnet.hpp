#pragma once

#include "wsnet/config.hpp"
#include "wsnet/conv.hpp"
#include "wsnet/cost.hpp"
#include "wsnet/dataset.hpp"
#include "wsnet/network.hpp"
#include "wsnet/optim.hpp"
#include "wsnet/quantize.hpp"
#include "wsnet/sampling.hpp"
#include "wsnet/serialize.hpp"
#include "wsnet/tensor.hpp"
#include "wsnet/train.hpp"
#include "wsnet/verify.hpp"
