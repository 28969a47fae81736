#pragma once

#include "relang/catalog.hpp"
#include "relang/error.hpp"
#include "relang/eval.hpp"
#include "relang/format.hpp"
#include "relang/key.hpp"
#include "relang/shell.hpp"
#include "relang/snapshot.hpp"
#include "relang/store.hpp"
#include "relang/syntax.hpp"
#include "relang/tuple_set.hpp"
#include "relang/txn.hpp"
#include "relang/value.hpp"
