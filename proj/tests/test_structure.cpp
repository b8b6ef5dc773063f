#include <gtest/gtest.h>

#include "lannlab/error.hpp"
#include "lannlab/structure.hpp"

using namespace lannlab;

namespace {

std::size_t offset_of(const std::string& text) {
    try {
        parse_structure(text);
    } catch (const ParseError& e) {
        return e.offset();
    }
    ADD_FAILURE() << text << " parsed";
    return 0;
}

}  // namespace

TEST(Structure, ParsesListedWidths) {
    const auto s = parse_structure("L3M(32,128,16)_T");
    EXPECT_EQ(s.widths, (std::vector<int>{32, 128, 16}));
    EXPECT_EQ(s.activation.kind(), ActivationKind::tanh);
}

TEST(Structure, ParsesRepeatedWidth) {
    const auto deep = parse_structure("L6M100_T");
    EXPECT_EQ(deep.widths, std::vector<int>(6, 100));
    const auto sig = parse_structure("L3M300_S");
    EXPECT_EQ(sig.widths, std::vector<int>(3, 300));
    EXPECT_EQ(sig.activation.kind(), ActivationKind::sigmoid);
}

TEST(Structure, RoundTripsThroughString) {
    for (const char* text : {"L3M(32,128,16)_T", "L6M100_T", "L3M300_S", "L1M7_S"}) {
        const auto s = parse_structure(text);
        EXPECT_EQ(parse_structure(to_string(s)), s) << text;
    }
    EXPECT_EQ(to_string(parse_structure("L2M(5,5)_T")), "L2M5_T");
}

TEST(Structure, ErrorsNameTheOffendingPosition) {
    EXPECT_EQ(offset_of("L3MX"), 3u);
    EXPECT_EQ(offset_of("X3M5_T"), 0u);
    EXPECT_EQ(offset_of("L3M5_R"), 5u);
    EXPECT_EQ(offset_of("L3M5_T!"), 6u);
    EXPECT_EQ(offset_of("L3M5"), 4u);
    EXPECT_EQ(offset_of("L2M(4,0)_T"), 6u);
    EXPECT_EQ(offset_of("L0M4_T"), 1u);
    EXPECT_EQ(offset_of("L3M(4,4"), 7u);
    // Width count mismatch points at the closing parenthesis.
    EXPECT_EQ(offset_of("L3M(4,4)_T"), 7u);
    try {
        parse_structure("L3MX");
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("found 'X'"), std::string::npos);
    }
}
