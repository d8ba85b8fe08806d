#pragma once

#include <gtest/gtest.h>

#include "sld/error.hpp"

// Passes when `stmt` throws sld::Error carrying `expected`.
#define EXPECT_SLD_ERROR(stmt, expected)                                                        \
    do {                                                                                        \
        try {                                                                                   \
            stmt;                                                                               \
            ADD_FAILURE() << "expected " << sld::error_name(expected) << ", nothing thrown";    \
        } catch (const sld::Error& e_) {                                                        \
            EXPECT_EQ(e_.name(), sld::error_name(expected)) << e_.what();                       \
        }                                                                                       \
    } while (0)
