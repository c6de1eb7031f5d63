#pragma once

#include <gtest/gtest.h>

#include "acgen/error.hpp"

/// Fails unless `stmt` throws acgen::Error with the given code.
#define EXPECT_ERROR_CODE(stmt, expected)                                                            \
  do {                                                                                               \
    try {                                                                                            \
      stmt;                                                                                          \
      ADD_FAILURE() << #stmt " did not throw";                                                       \
    } catch (const acgen::Error& e_) {                                                               \
      EXPECT_EQ(acgen::to_string(e_.code()), acgen::to_string(acgen::ErrorCode::expected)) << e_.what(); \
    }                                                                                                \
  } while (0)
