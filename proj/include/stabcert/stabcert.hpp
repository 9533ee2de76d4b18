#pragma once

#include "stabcert/error.hpp"
#include "stabcert/linalg.hpp"
#include "stabcert/groupnorm.hpp"
#include "stabcert/nuclear.hpp"
#include "stabcert/problem.hpp"
#include "stabcert/solver.hpp"
#include "stabcert/stability.hpp"
#include "stabcert/io.hpp"
