#include <cctype>
#include <charconv>
#include <cstdlib>
#include <optional>

#include "openstab/system.hpp"

namespace openstab {

namespace {

// Cursor over one logical line, tracking the column for error messages.
class LineCursor {
public:
    LineCursor(const std::string& text, int line_no)
        : text_(text), line_(line_no) {}

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    }

    bool at_end() {
        skip_ws();
        return pos_ >= text_.size();
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    char get() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of line");
        return text_[pos_++];
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    // Raw (no whitespace skip) character access for multi-char tokens.
    char raw_peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    void raw_advance() { ++pos_; }

    int column() const { return static_cast<int>(pos_) + 1; }
    int line() const { return line_; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, line_, column());
    }

    std::string ident() {
        skip_ws();
        if (pos_ >= text_.size() || (!std::isalpha(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '_'))
            fail("expected identifier");
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        return text_.substr(start, pos_ - start);
    }

    int integer() {
        skip_ws();
        bool negative = accept('-');
        skip_ws();
        if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
            fail("expected integer");
        long v = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            v = v * 10 + (text_[pos_] - '0');
            if (v > 1000000) fail("integer out of range");
            ++pos_;
        }
        return static_cast<int>(negative ? -v : v);
    }

    double number() {
        skip_ws();
        size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
        if (pos_ == start || (pos_ == start + 1 && text_[start] == '.'))
            fail("expected number");
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            } else {
                pos_ = mark;  // 'e' belonged to something else; not valid here
            }
        }
        double v = 0.0;
        auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (res.ec != std::errc()) fail("malformed number");
        return v;
    }

private:
    const std::string& text_;
    size_t pos_ = 0;
    int line_;
};

// Recursive-descent expression parser over one line.
class ExprParser {
public:
    ExprParser(LineCursor& cur, int n, int m) : cur_(cur), n_(n), m_(m) {}

    ExprPtr parse() {
        ExprPtr e = expr();
        if (!cur_.at_end()) cur_.fail("trailing characters after expression");
        return e;
    }

private:
    ExprPtr expr() {
        ExprPtr e = term();
        while (true) {
            if (cur_.accept('+')) {
                e = make_add(std::move(e), term());
            } else if (cur_.accept('-')) {
                e = make_sub(std::move(e), term());
            } else {
                return e;
            }
        }
    }

    ExprPtr term() {
        ExprPtr e = factor();
        while (true) {
            if (cur_.accept('*')) {
                e = make_mul(std::move(e), factor());
            } else if (cur_.accept('/')) {
                e = make_div(std::move(e), factor());
            } else {
                return e;
            }
        }
    }

    ExprPtr factor() {
        ExprPtr a = atom();
        if (cur_.accept('^')) {
            int k = cur_.integer();
            return make_pow(std::move(a), k);
        }
        return a;
    }

    ExprPtr atom() {
        char c = cur_.peek();
        if (c == '-') {
            cur_.get();
            return make_neg(atom());
        }
        if (c == '(') {
            cur_.get();
            ExprPtr e = expr();
            cur_.expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return make_constant(cur_.number());
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            int col = cur_.column();
            std::string id = cur_.ident();
            if (id.size() > 1 && (id[0] == 'x' || id[0] == 'u') && all_digits(id.substr(1))) {
                int idx = std::atoi(id.c_str() + 1);
                int limit = id[0] == 'x' ? n_ : m_;
                if (idx < 1 || idx > limit)
                    throw ParseError("unknown variable index " + id, cur_.line(), col);
                return id[0] == 'x' ? make_var_x(idx) : make_var_u(idx);
            }
            std::optional<ExprFn> fn = lookup_fn(id);
            if (!fn) throw ParseError("unknown identifier '" + id + "'", cur_.line(), col);
            cur_.expect('(');
            ExprPtr arg = expr();
            cur_.expect(')');
            return make_call(*fn, std::move(arg));
        }
        cur_.fail("expected number, variable, function call, or '('");
    }

    static bool all_digits(const std::string& s) {
        if (s.empty()) return false;
        for (char c : s)
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        return true;
    }

    static std::optional<ExprFn> lookup_fn(const std::string& id) {
        if (id == "sin") return ExprFn::Sin;
        if (id == "cos") return ExprFn::Cos;
        if (id == "exp") return ExprFn::Exp;
        if (id == "sqrt") return ExprFn::Sqrt;
        if (id == "abs") return ExprFn::Abs;
        return std::nullopt;
    }

    LineCursor& cur_;
    int n_;
    int m_;
};

struct Line {
    std::string text;
    int number;
};

std::vector<Line> logical_lines(const std::string& text) {
    std::vector<Line> lines;
    std::string current;
    int number = 1;
    for (size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            std::string trimmed = current;
            if (!trimmed.empty() && trimmed.back() == '\r') trimmed.pop_back();
            bool blank = true;
            for (char c : trimmed)
                if (c != ' ' && c != '\t') blank = false;
            if (!blank) lines.push_back({trimmed, number});
            current.clear();
            ++number;
        } else {
            current += text[i];
        }
    }
    return lines;
}

}  // namespace

SystemDef parse_system(const std::string& text) {
    std::vector<Line> lines = logical_lines(text);
    if (lines.empty()) throw ParseError("empty system file", 1, 1);

    SystemDef sys;
    size_t li = 0;

    {
        LineCursor cur(lines[li].text, lines[li].number);
        if (cur.ident() != "n") cur.fail("header must start with 'n='");
        cur.expect('=');
        sys.n = cur.integer();
        if (cur.ident() != "m") cur.fail("header must declare 'm='");
        cur.expect('=');
        sys.m = cur.integer();
        if (!cur.at_end()) cur.fail("trailing characters after header");
        if (sys.n < 1) cur.fail("state dimension n must be positive");
        if (sys.m < 0) cur.fail("control dimension m must be nonnegative");
        ++li;
    }

    if (li < lines.size()) {
        LineCursor probe(lines[li].text, lines[li].number);
        if (probe.peek() == 'n') {
            LineCursor cur(lines[li].text, lines[li].number);
            std::string id = cur.ident();
            if (id == "name") {
                cur.expect('=');
                sys.name = cur.ident();
                if (!cur.at_end()) cur.fail("trailing characters after name");
                ++li;
            }
        }
    }

    for (int k = 1; k <= sys.n; ++k) {
        if (li >= lines.size()) {
            int last = lines.back().number;
            throw ParseError("declared n=" + std::to_string(sys.n) + " but found only " +
                                 std::to_string(k - 1) + " equations",
                             last + 1, 1);
        }
        LineCursor cur(lines[li].text, lines[li].number);
        std::string id = cur.ident();
        if (id != "f" + std::to_string(k))
            cur.fail("expected equation 'f" + std::to_string(k) + " = ...'");
        cur.expect('=');
        ExprParser parser(cur, sys.n, sys.m);
        sys.exprs.push_back(parser.parse());
        ++li;
    }

    if (li < lines.size()) {
        LineCursor cur(lines[li].text, lines[li].number);
        cur.fail("declared n=" + std::to_string(sys.n) +
                 " but the file continues after f" + std::to_string(sys.n));
    }
    return sys;
}

std::string print_system(const SystemDef& sys) {
    std::string out = "n=" + std::to_string(sys.n) + " m=" + std::to_string(sys.m) + "\n";
    if (!sys.name.empty()) out += "name=" + sys.name + "\n";
    for (int k = 0; k < sys.n; ++k) {
        out += "f" + std::to_string(k + 1) + " = " + to_string(*sys.exprs[static_cast<size_t>(k)]) + "\n";
    }
    return out;
}

}  // namespace openstab
