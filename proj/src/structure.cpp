#include "lannlab/structure.hpp"

#include <cctype>
#include <charconv>

#include "lannlab/error.hpp"

namespace lannlab {

namespace {

class Cursor {
public:
    explicit Cursor(std::string_view text) : text_(text) {}

    std::size_t pos() const { return pos_; }
    bool done() const { return pos_ == text_.size(); }
    char peek() const { return done() ? '\0' : text_[pos_]; }

    void expect(char c, const char* what) {
        if (peek() != c) fail(std::string("expected ") + what);
        ++pos_;
    }

    int positive_int(const char* what) {
        const std::size_t start = pos_;
        while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        if (start == pos_) fail(std::string("expected ") + what);
        int value = 0;
        const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc() || value <= 0) throw ParseError(std::string(what) + " must be a positive integer", start);
        return value;
    }

    [[noreturn]] void fail(const std::string& what) const {
        const std::string found = done() ? "end of input" : std::string("'") + peek() + "'";
        throw ParseError("structure string: " + what + ", found " + found, pos_);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

NetworkStructure parse_structure(std::string_view text) {
    Cursor cur(text);
    cur.expect('L', "'L'");
    const std::size_t depth_pos = cur.pos();
    const int depth = cur.positive_int("layer count");
    cur.expect('M', "'M'");
    NetworkStructure s;
    if (cur.peek() == '(') {
        cur.expect('(', "'('");
        s.widths.push_back(cur.positive_int("width"));
        while (cur.peek() == ',') {
            cur.expect(',', "','");
            s.widths.push_back(cur.positive_int("width"));
        }
        const std::size_t close = cur.pos();
        cur.expect(')', "',' or ')'");
        if (static_cast<int>(s.widths.size()) != depth)
            throw ParseError("structure string: " + std::to_string(s.widths.size()) + " widths listed for " +
                                 std::to_string(depth) + " layers (count at offset " + std::to_string(depth_pos) + ")",
                             close);
    } else {
        s.widths.assign(static_cast<std::size_t>(depth), cur.positive_int("width or '('"));
    }
    cur.expect('_', "'_'");
    switch (cur.peek()) {
        case 'T': s.activation = Activation(ActivationKind::tanh); break;
        case 'S': s.activation = Activation(ActivationKind::sigmoid); break;
        default: cur.fail("activation letter T or S");
    }
    cur.expect(cur.peek(), "activation letter");
    if (!cur.done()) cur.fail("end of input");
    return s;
}

std::string to_string(const NetworkStructure& s) {
    std::string out = "L" + std::to_string(s.widths.size()) + "M";
    bool uniform = true;
    for (int w : s.widths) uniform = uniform && w == s.widths.front();
    if (uniform) {
        out += std::to_string(s.widths.front());
    } else {
        out += "(";
        for (std::size_t i = 0; i < s.widths.size(); ++i) out += (i ? "," : "") + std::to_string(s.widths[i]);
        out += ")";
    }
    out += s.activation.kind() == ActivationKind::sigmoid ? "_S" : "_T";
    return out;
}

}  // namespace lannlab
