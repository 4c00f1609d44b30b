#pragma once

#include "qbmor/errors.hpp"
#include "qbmor/io.hpp"
#include "qbmor/models.hpp"
#include "qbmor/orthonormalize.hpp"
#include "qbmor/reduce.hpp"
#include "qbmor/shifted_solve.hpp"
#include "qbmor/simulate.hpp"
#include "qbmor/system.hpp"
#include "qbmor/tensor.hpp"
#include "qbmor/transfer.hpp"
#include "qbmor/types.hpp"
