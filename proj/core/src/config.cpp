#include "beablesim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string_view>
#include <unordered_set>
#include <utility>

namespace beablesim {

namespace {

constexpr double kConfigHermitianTol = 1e-9;
constexpr double kConfigNormTol = 1e-6;

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_complex(Complex z) {
    return "[" + fmt_real(z.real()) + ", " + fmt_real(z.imag()) + "]";
}

// ---- expression evaluation ----

// A value mid-expression: a complex scalar unless `matrix` is engaged.
struct Value {
    std::optional<Matrix> matrix;
    Complex scalar{0.0, 0.0};

    bool is_matrix() const { return matrix.has_value(); }
    bool is_real() const { return !is_matrix() && scalar.imag() == 0.0; }
};

struct Token {
    enum class Kind { Number, Ident, Punct, End };
    Kind kind = Kind::End;
    double number = 0.0;
    std::string ident;
    char punct = 0;
    int column = 0; // 1-based within the original config line
};

class Lexer {
public:
    Lexer(std::string text, int line, int column_offset)
        : text_(std::move(text)), line_(line), column_offset_(column_offset) {
        advance();
    }

    const Token& peek() const { return current_; }
    Token take() {
        Token t = current_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        current_ = Token{};
        current_.column = column_offset_ + static_cast<int>(pos_) + 1;
        if (pos_ >= text_.size()) {
            current_.kind = Token::Kind::End;
            return;
        }
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = text_.c_str() + pos_;
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(begin, &end);
            if (end == begin) {
                throw ConfigError("malformed number", line_, current_.column);
            }
            if (errno == ERANGE || !std::isfinite(v)) {
                throw ConfigError("number out of range", line_, current_.column);
            }
            current_.kind = Token::Kind::Number;
            current_.number = v;
            pos_ += static_cast<std::size_t>(end - begin);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = pos_;
            while (end < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
                ++end;
            }
            current_.kind = Token::Kind::Ident;
            current_.ident = text_.substr(pos_, end - pos_);
            pos_ = end;
            return;
        }
        switch (c) {
        case '+': case '-': case '*': case '/':
        case '(': case ')': case '[': case ']':
        case ',': case ';':
            current_.kind = Token::Kind::Punct;
            current_.punct = c;
            ++pos_;
            return;
        default:
            throw ConfigError(std::string("unexpected character '") + c + "'", line_,
                              current_.column);
        }
    }

    std::string text_;
    int line_;
    int column_offset_;
    std::size_t pos_ = 0;
    Token current_;
};

class ExprParser {
public:
    ExprParser(std::string text, int line, int column_offset)
        : lexer_(std::move(text), line, column_offset), line_(line) {}

    Value parse_full() {
        Value v = parse_expr();
        expect_end();
        return v;
    }

    // expr (',' expr)*; records the start column of each element when asked.
    std::vector<Value> parse_list(std::vector<int>* columns = nullptr) {
        std::vector<Value> items;
        for (;;) {
            if (columns) columns->push_back(lexer_.peek().column);
            items.push_back(parse_expr());
            if (is_punct(',')) {
                lexer_.take();
                continue;
            }
            break;
        }
        expect_end();
        return items;
    }

private:
    bool is_punct(char c) const {
        return lexer_.peek().kind == Token::Kind::Punct && lexer_.peek().punct == c;
    }

    void expect_end() {
        const Token& t = lexer_.peek();
        if (t.kind != Token::Kind::End) {
            throw ConfigError("unexpected trailing input", line_, t.column);
        }
    }

    Token expect_punct(char c, const std::string& context) {
        const Token& t = lexer_.peek();
        if (t.kind != Token::Kind::Punct || t.punct != c) {
            throw ConfigError("expected '" + std::string(1, c) + "' " + context, line_, t.column);
        }
        return lexer_.take();
    }

    Value parse_expr() {
        Value v = parse_term();
        while (is_punct('+') || is_punct('-')) {
            const Token op = lexer_.take();
            Value rhs = parse_term();
            v = add_sub(std::move(v), std::move(rhs), op.punct == '-', op.column);
        }
        return v;
    }

    Value parse_term() {
        Value v = parse_unary();
        while (is_punct('*') || is_punct('/')) {
            const Token op = lexer_.take();
            Value rhs = parse_unary();
            v = (op.punct == '*') ? multiply(std::move(v), std::move(rhs), op.column)
                                  : divide(std::move(v), std::move(rhs), op.column);
        }
        return v;
    }

    Value parse_unary() {
        if (is_punct('-')) {
            lexer_.take();
            Value v = parse_unary();
            if (v.is_matrix()) {
                *v.matrix = -*v.matrix;
            } else {
                v.scalar = -v.scalar;
            }
            return v;
        }
        if (is_punct('+')) {
            lexer_.take();
            return parse_unary();
        }
        return parse_primary();
    }

    Value parse_primary() {
        const Token t = lexer_.take();
        switch (t.kind) {
        case Token::Kind::Number:
            return scalar_value(t.number);
        case Token::Kind::Ident:
            return parse_named(t);
        case Token::Kind::Punct:
            if (t.punct == '(') {
                Value v = parse_expr();
                expect_punct(')', "to close the parenthesis");
                return v;
            }
            if (t.punct == '[') {
                return parse_bracket(t.column);
            }
            throw ConfigError(std::string("unexpected '") + t.punct + "'", line_, t.column);
        case Token::Kind::End:
            throw ConfigError("unexpected end of expression", line_, t.column);
        }
        throw ConfigError("unexpected token", line_, t.column);
    }

    Value parse_named(const Token& t) {
        if (t.ident == "pi") return scalar_value(std::numbers::pi);
        if (t.ident == "sx") return matrix_value(pauli(Pauli::X).entries());
        if (t.ident == "sy") return matrix_value(pauli(Pauli::Y).entries());
        if (t.ident == "sz") return matrix_value(pauli(Pauli::Z).entries());
        if (t.ident == "id") {
            if (is_punct('(')) {
                lexer_.take();
                const int arg_col = lexer_.peek().column;
                Value n = parse_expr();
                expect_punct(')', "to close id(...)");
                return matrix_value(Matrix::Identity(small_int(n, arg_col, "id"),
                                                      small_int(n, arg_col, "id")));
            }
            return matrix_value(Matrix::Identity(2, 2));
        }
        if (t.ident == "kron") {
            expect_punct('(', "after kron");
            const int a_col = lexer_.peek().column;
            Value a = parse_expr();
            expect_punct(',', "between the kron arguments");
            const int b_col = lexer_.peek().column;
            Value b = parse_expr();
            expect_punct(')', "to close kron(...)");
            if (!a.is_matrix()) {
                throw ConfigError("kron expects matrix arguments", line_, a_col);
            }
            if (!b.is_matrix()) {
                throw ConfigError("kron expects matrix arguments", line_, b_col);
            }
            const auto rows = a.matrix->rows() * b.matrix->rows();
            const auto cols = a.matrix->cols() * b.matrix->cols();
            if (rows > kDefaultDimCap || cols > kDefaultDimCap) {
                throw ConfigError("kron result dimension " + std::to_string(rows) +
                                      " exceeds the cap " + std::to_string(kDefaultDimCap),
                                  line_, t.column);
            }
            Matrix out(rows, cols);
            for (Eigen::Index i = 0; i < a.matrix->rows(); ++i) {
                for (Eigen::Index j = 0; j < a.matrix->cols(); ++j) {
                    out.block(i * b.matrix->rows(), j * b.matrix->cols(), b.matrix->rows(),
                              b.matrix->cols()) = (*a.matrix)(i, j) * (*b.matrix);
                }
            }
            return matrix_value(std::move(out));
        }
        throw ConfigError("unknown name '" + t.ident + "'", line_, t.column);
    }

    // Bracket groups: [re, im] (two real elements) is a complex scalar;
    // [e; e; ...] with two or more rows (or a single element) is a matrix.
    Value parse_bracket(int open_column) {
        std::vector<std::vector<Value>> rows;
        rows.emplace_back();
        for (;;) {
            const int elem_col = lexer_.peek().column;
            Value v = parse_expr();
            if (v.is_matrix()) {
                throw ConfigError("matrix entries must be scalars", line_, elem_col);
            }
            rows.back().push_back(std::move(v));
            if (is_punct(',')) {
                lexer_.take();
                continue;
            }
            if (is_punct(';')) {
                lexer_.take();
                rows.emplace_back();
                continue;
            }
            expect_punct(']', "to close the bracket");
            break;
        }

        if (rows.size() == 1) {
            const auto& row = rows.front();
            if (row.size() == 2 && row[0].is_real() && row[1].is_real()) {
                return scalar_value(Complex(row[0].scalar.real(), row[1].scalar.real()));
            }
            if (row.size() == 1) {
                Matrix m(1, 1);
                m(0, 0) = row[0].scalar;
                return matrix_value(std::move(m));
            }
            throw ConfigError("a one-row bracket must be a complex pair [re, im]", line_,
                              open_column);
        }

        const std::size_t ncols = rows.front().size();
        for (const auto& row : rows) {
            if (row.size() != ncols) {
                throw ConfigError("matrix rows have unequal lengths", line_, open_column);
            }
        }
        Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ncols));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < ncols; ++j) {
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].scalar;
            }
        }
        return matrix_value(std::move(m));
    }

    int small_int(const Value& v, int column, const std::string& what) {
        if (!v.is_real()) {
            throw ConfigError(what + " expects a positive integer", line_, column);
        }
        const double d = v.scalar.real();
        const double r = std::nearbyint(d);
        if (std::abs(d - r) > 1e-9 || r < 1 || r > kDefaultDimCap) {
            throw ConfigError(what + " expects an integer between 1 and " +
                                  std::to_string(kDefaultDimCap),
                              line_, column);
        }
        return static_cast<int>(r);
    }

    static Value scalar_value(Complex z) {
        Value v;
        v.scalar = z;
        return v;
    }

    static Value matrix_value(Matrix m) {
        Value v;
        v.matrix = std::move(m);
        return v;
    }

    Value add_sub(Value a, Value b, bool subtract, int column) {
        if (a.is_matrix() != b.is_matrix()) {
            throw ConfigError("cannot add a scalar and a matrix", line_, column);
        }
        if (a.is_matrix()) {
            if (a.matrix->rows() != b.matrix->rows() || a.matrix->cols() != b.matrix->cols()) {
                throw ConfigError("matrix dimensions do not match for '+'/'-'", line_, column);
            }
            *a.matrix = subtract ? (*a.matrix - *b.matrix).eval() : (*a.matrix + *b.matrix).eval();
            return a;
        }
        a.scalar = subtract ? a.scalar - b.scalar : a.scalar + b.scalar;
        return a;
    }

    Value multiply(Value a, Value b, int column) {
        if (!a.is_matrix() && !b.is_matrix()) {
            a.scalar *= b.scalar;
            return a;
        }
        if (a.is_matrix() && b.is_matrix()) {
            if (a.matrix->cols() != b.matrix->rows()) {
                throw ConfigError("matrix dimensions do not match for '*'", line_, column);
            }
            *a.matrix = (*a.matrix * *b.matrix).eval();
            return a;
        }
        if (a.is_matrix()) {
            *a.matrix *= b.scalar;
            return a;
        }
        *b.matrix *= a.scalar;
        return b;
    }

    Value divide(Value a, Value b, int column) {
        if (b.is_matrix()) {
            throw ConfigError("cannot divide by a matrix", line_, column);
        }
        if (b.scalar == Complex(0.0, 0.0)) {
            throw ConfigError("division by zero", line_, column);
        }
        if (a.is_matrix()) {
            *a.matrix /= b.scalar;
        } else {
            a.scalar /= b.scalar;
        }
        return a;
    }

    Lexer lexer_;
    int line_;
};

// ---- line-level parsing ----

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

long long parse_integer(std::string_view token, int line, int column, long long lo, long long hi,
                        const std::string& what) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ConfigError(what + " must be an integer", line, column);
    }
    if (v < lo || v > hi) {
        throw ConfigError(what + " must be between " + std::to_string(lo) + " and " +
                              std::to_string(hi),
                          line, column);
    }
    return v;
}

double parse_positive_real(std::string_view value, int line, int column,
                           const std::string& what) {
    ExprParser parser(std::string(value), line, column - 1);
    const Value v = parser.parse_full();
    if (!v.is_real()) {
        throw ConfigError(what + " must be a real number", line, column);
    }
    const double d = v.scalar.real();
    if (!(d > 0.0) || !std::isfinite(d)) {
        throw ConfigError(what + " must be positive", line, column);
    }
    return d;
}

void check_hermitian_literal(const Matrix& m, int line, int column) {
    if (m.rows() != m.cols()) {
        throw ConfigError("segment matrix must be square (got " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()) + ")",
                          line, column);
    }
    if (m.rows() > kDefaultDimCap) {
        throw ConfigError("segment matrix dimension " + std::to_string(m.rows()) +
                              " exceeds the cap " + std::to_string(kDefaultDimCap),
                          line, column);
    }
    double worst = 0.0;
    Eigen::Index wi = 0, wj = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double defect = std::abs(m(i, j) - std::conj(m(j, i)));
            if (defect > worst) {
                worst = defect;
                wi = i;
                wj = j;
            }
        }
    }
    if (worst > kConfigHermitianTol) {
        throw ConfigError("segment matrix is not Hermitian: entry (" + std::to_string(wi) + ", " +
                              std::to_string(wj) + ") = " + fmt_complex(m(wi, wj)) +
                              " but the conjugate of (" + std::to_string(wj) + ", " +
                              std::to_string(wi) + ") is " + fmt_complex(std::conj(m(wj, wi))),
                          line, column);
    }
}

struct KeyContext {
    int line;
    int key_column;   // 1-based start of the key
    int value_column; // 1-based start of the value
    std::string_view value;
};

void parse_initial_beable(RunConfig& config, const KeyContext& ctx) {
    const std::string_view value = ctx.value;
    std::size_t split = 0;
    while (split < value.size() && !std::isspace(static_cast<unsigned char>(value[split]))) {
        ++split;
    }
    const std::string_view head = value.substr(0, split);
    const std::string_view tail = trim(value.substr(split));

    InitialBeableSpec spec;
    spec.line = ctx.line;
    spec.column = ctx.value_column;
    if (head == "born") {
        if (!tail.empty()) {
            throw ConfigError("'born' takes no argument", ctx.line, ctx.value_column);
        }
        spec.kind = InitialBeableSpec::Kind::Born;
    } else if (head == "fixed") {
        if (tail.empty()) {
            throw ConfigError("'fixed' needs a beable index or label", ctx.line,
                              ctx.value_column);
        }
        spec.column = ctx.value_column + static_cast<int>(tail.data() - value.data());
        const bool digits = std::all_of(tail.begin(), tail.end(), [](char c) {
            return std::isdigit(static_cast<unsigned char>(c));
        });
        if (digits) {
            spec.kind = InitialBeableSpec::Kind::FixedIndex;
            spec.index = static_cast<int>(
                parse_integer(tail, ctx.line, spec.column, 0, kDefaultDimCap - 1, "beable index"));
        } else {
            spec.kind = InitialBeableSpec::Kind::FixedLabel;
            spec.label = std::string(tail);
        }
    } else {
        throw ConfigError("initial_beable must be 'born' or 'fixed <index-or-label>'", ctx.line,
                          ctx.value_column);
    }
    config.initial_beable = spec;
}

void parse_segment(RunConfig& config, const KeyContext& ctx) {
    const std::string_view value = ctx.value;
    const std::size_t colon = value.find(':');
    if (colon == std::string_view::npos) {
        throw ConfigError("segment must be 'duration : hamiltonian'", ctx.line, ctx.value_column);
    }
    const std::string_view duration_part = trim(value.substr(0, colon));
    const std::string_view matrix_part = value.substr(colon + 1);
    if (duration_part.empty()) {
        throw ConfigError("segment is missing its duration", ctx.line, ctx.value_column);
    }
    const double duration =
        parse_positive_real(duration_part, ctx.line,
                            ctx.value_column + static_cast<int>(duration_part.data() - value.data()),
                            "segment duration");

    const int matrix_column = ctx.value_column + static_cast<int>(colon) + 1;
    ExprParser parser{std::string(matrix_part), ctx.line, matrix_column - 1};
    const Value v = parser.parse_full();
    if (!v.is_matrix()) {
        throw ConfigError("segment needs a matrix to the right of ':'", ctx.line, matrix_column);
    }
    check_hermitian_literal(*v.matrix, ctx.line, matrix_column);
    config.segments.push_back(SegmentSpec{duration, *v.matrix, ctx.line});
}

void parse_measurement_split(RunConfig& config, const KeyContext& ctx) {
    Lexer lexer{std::string(ctx.value), ctx.line, ctx.value_column - 1};
    const Token s = lexer.take();
    const Token x = lexer.take();
    const Token a = lexer.take();
    const Token end = lexer.take();
    const bool shape_ok = s.kind == Token::Kind::Number && x.kind == Token::Kind::Ident &&
                          x.ident == "x" && a.kind == Token::Kind::Number &&
                          end.kind == Token::Kind::End;
    if (!shape_ok) {
        throw ConfigError("measurement must be '<system dim> x <apparatus dim>'", ctx.line,
                          ctx.value_column);
    }
    const auto to_dim = [&](const Token& t) {
        const double r = std::nearbyint(t.number);
        if (std::abs(t.number - r) > 0 || r < 1 || r > kDefaultDimCap) {
            throw ConfigError("measurement dimensions must be integers between 1 and " +
                                  std::to_string(kDefaultDimCap),
                              ctx.line, t.column);
        }
        return static_cast<int>(r);
    };
    config.measurement_split = std::make_pair(to_dim(s), to_dim(a));
}

void parse_labels(RunConfig& config, const KeyContext& ctx) {
    std::string_view rest = ctx.value;
    int offset = ctx.value_column;
    std::vector<std::string> labels;
    for (;;) {
        const std::size_t comma = rest.find(',');
        const std::string_view piece = rest.substr(0, comma);
        const std::string_view label = trim(piece);
        const int label_col = offset + static_cast<int>(label.empty() ? 0 : label.data() - rest.data());
        if (label.empty()) {
            throw ConfigError("empty label", ctx.line, label_col);
        }
        for (const char c : label) {
            if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '#' || c == '=' ||
                c == ':') {
                throw ConfigError("label '" + std::string(label) + "' contains a forbidden character",
                                  ctx.line, label_col);
            }
        }
        if (std::find(labels.begin(), labels.end(), std::string(label)) != labels.end()) {
            throw ConfigError("duplicate label '" + std::string(label) + "'", ctx.line, label_col);
        }
        labels.emplace_back(label);
        if (comma == std::string_view::npos) break;
        offset += static_cast<int>(comma) + 1;
        rest = rest.substr(comma + 1);
    }
    config.labels = std::move(labels);
}

std::vector<Complex> parse_scalar_list(const KeyContext& ctx) {
    ExprParser parser{std::string(ctx.value), ctx.line, ctx.value_column - 1};
    std::vector<int> columns;
    const std::vector<Value> items = parser.parse_list(&columns);
    std::vector<Complex> out;
    out.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].is_matrix()) {
            throw ConfigError("expected a scalar entry", ctx.line, columns[i]);
        }
        out.push_back(items[i].scalar);
    }
    return out;
}

Vector parse_state_vector(const KeyContext& ctx) {
    const std::vector<Complex> entries = parse_scalar_list(ctx);
    Vector v(static_cast<Eigen::Index>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = entries[i];
    }
    return v;
}

// ---- building ----

Vector renormalized(const Vector& v, int line, int column, const std::string& what) {
    const double n2 = v.squaredNorm();
    if (!std::isfinite(n2) || std::abs(n2 - 1.0) > kConfigNormTol) {
        throw ConfigError(what + " is not normalized: sum of squared magnitudes is " +
                              fmt_real(n2),
                          line, column);
    }
    return v / std::sqrt(n2);
}

InitialBeableLaw resolve_initial_law(const InitialBeableSpec& spec, const BeableBasis& basis,
                                     const InitialBeableLaw& fallback) {
    using Kind = InitialBeableSpec::Kind;
    switch (spec.kind) {
    case Kind::Default:
        return fallback;
    case Kind::Born:
        return InitialBeableLaw::born();
    case Kind::FixedIndex:
        if (spec.index < 0 || spec.index >= basis.dim()) {
            throw ConfigError("initial beable index " + std::to_string(spec.index) +
                                  " out of range for dimension " + std::to_string(basis.dim()),
                              spec.line, spec.column);
        }
        return InitialBeableLaw::fixed(spec.index);
    case Kind::FixedLabel: {
        const std::optional<int> idx = basis.index_of(spec.label);
        if (!idx) {
            throw ConfigError("unknown beable label '" + spec.label + "'", spec.line,
                              spec.column);
        }
        return InitialBeableLaw::fixed(*idx);
    }
    }
    throw ConfigError("unreachable initial-beable kind");
}

void apply_coefficients(Scenario& sc, const std::vector<Complex>& coefficients) {
    if (!sc.measurement) {
        throw ConfigError("coefficients apply only to measurement runs; scenario '" + sc.name +
                          "' is not one");
    }
    const int sdim = sc.measurement->system_dim();
    if (static_cast<int>(coefficients.size()) != sdim) {
        throw ConfigError("expected " + std::to_string(sdim) + " coefficients, got " +
                          std::to_string(coefficients.size()));
    }
    Vector c(sdim);
    for (int i = 0; i < sdim; ++i) c(i) = coefficients[static_cast<std::size_t>(i)];
    c = renormalized(c, 0, 0, "coefficients");
    sc.default_system_coefficients.assign(c.data(), c.data() + c.size());
    sc.initial_state = tensor_state(StateVector(c), sc.measurement->apparatus_ready());
}

Scenario build_named(const RunConfig& config) {
    Scenario sc = [&] {
        try {
            return make_scenario(*config.scenario, config.tau);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }();
    if (!config.coefficients.empty()) {
        apply_coefficients(sc, config.coefficients);
    }
    const BeableBasis& law_basis = sc.measurement ? sc.measurement->system_basis() : sc.basis;
    sc.default_initial_law =
        resolve_initial_law(config.initial_beable, law_basis, sc.default_initial_law);
    return sc;
}

Scenario build_inline(const RunConfig& config) {
    if (config.segments.empty()) {
        throw ConfigError("inline definition needs at least one segment");
    }
    const int dim = config.dim ? *config.dim
                               : static_cast<int>(config.segments.front().hamiltonian.rows());

    std::vector<Segment> segments;
    segments.reserve(config.segments.size());
    for (const SegmentSpec& spec : config.segments) {
        if (spec.hamiltonian.rows() != dim) {
            throw ConfigError("segment matrix is " + std::to_string(spec.hamiltonian.rows()) +
                                  "x" + std::to_string(spec.hamiltonian.cols()) +
                                  " but the run dimension is " + std::to_string(dim),
                              spec.line, 1);
        }
        // Validated Hermitian within 1e-9 on parse; symmetrize the residual
        // so construction meets the tighter algebraic tolerance.
        const Matrix sym = 0.5 * (spec.hamiltonian + spec.hamiltonian.adjoint());
        segments.emplace_back(spec.duration * config.tau, HermitianOperator(sym / config.tau));
    }
    Schedule schedule{std::move(segments)};

    BeableBasis basis = [&] {
        if (config.labels.empty()) return BeableBasis::indexed(dim);
        if (static_cast<int>(config.labels.size()) != dim) {
            throw ConfigError("expected " + std::to_string(dim) + " labels, got " +
                              std::to_string(config.labels.size()));
        }
        return BeableBasis(dim, config.labels);
    }();

    std::optional<MeasurementSetup> setup;
    std::vector<Complex> coefficients;
    std::optional<StateVector> initial;

    if (config.measurement_split) {
        const auto [sdim, adim] = *config.measurement_split;
        if (sdim * adim != dim) {
            throw ConfigError("measurement split " + std::to_string(sdim) + " x " +
                              std::to_string(adim) + " does not match dimension " +
                              std::to_string(dim));
        }
        if (config.state) {
            throw ConfigError("give either 'state' or 'measurement' with 'coefficients', not both");
        }
        if (config.coefficients.empty()) {
            throw ConfigError("a measurement run needs 'coefficients' (one per system basis state)");
        }
        if (static_cast<int>(config.coefficients.size()) != sdim) {
            throw ConfigError("expected " + std::to_string(sdim) + " coefficients, got " +
                              std::to_string(config.coefficients.size()));
        }
        StateVector ready = [&] {
            if (!config.apparatus_ready) return StateVector::basis_state(adim, 0);
            if (config.apparatus_ready->size() != adim) {
                throw ConfigError("apparatus_ready has " +
                                  std::to_string(config.apparatus_ready->size()) +
                                  " entries for apparatus dimension " + std::to_string(adim));
            }
            return StateVector(renormalized(*config.apparatus_ready, 0, 0, "apparatus_ready"));
        }();
        Vector c(sdim);
        for (int i = 0; i < sdim; ++i) c(i) = config.coefficients[static_cast<std::size_t>(i)];
        c = renormalized(c, 0, 0, "coefficients");
        coefficients.assign(c.data(), c.data() + c.size());
        initial = tensor_state(StateVector(c), ready);
        setup = MeasurementSetup(sdim, adim, std::move(ready), schedule,
                                 BeableBasis::indexed(sdim), BeableBasis::indexed(adim));
    } else {
        if (config.apparatus_ready) {
            throw ConfigError("'apparatus_ready' needs a 'measurement' split");
        }
        if (!config.coefficients.empty()) {
            throw ConfigError("'coefficients' need a 'measurement' split; plain runs take 'state'");
        }
        if (!config.state) {
            throw ConfigError("inline definition needs 'state' (or 'measurement' with 'coefficients')");
        }
        if (config.state->size() != dim) {
            throw ConfigError("state has " + std::to_string(config.state->size()) +
                              " entries for dimension " + std::to_string(dim));
        }
        initial = StateVector(renormalized(*config.state, 0, 0, "state"));
    }

    const BeableBasis& law_basis = setup ? setup->system_basis() : basis;
    InitialBeableLaw law =
        resolve_initial_law(config.initial_beable, law_basis, InitialBeableLaw::born());

    return Scenario{
        .name = "inline",
        .expected_outcome = "",
        .tau = config.tau,
        .measurement = std::move(setup),
        .default_system_coefficients = std::move(coefficients),
        .schedule = std::move(schedule),
        .initial_state = std::move(*initial),
        .basis = std::move(basis),
        .default_initial_law = law,
    };
}

} // namespace

bool RunConfig::has_inline_definition() const {
    return dim.has_value() || !labels.empty() || !segments.empty() || state.has_value() ||
           measurement_split.has_value() || apparatus_ready.has_value();
}

RunConfig parse_config(const std::string& text) {
    RunConfig config;
    std::unordered_set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const std::size_t hash = raw.find('#');
        const std::string line = (hash == std::string::npos) ? raw : raw.substr(0, hash);

        std::size_t first = 0;
        while (first < line.size() && std::isspace(static_cast<unsigned char>(line[first]))) {
            ++first;
        }
        if (first == line.size()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected 'key = value'", line_no, static_cast<int>(first) + 1);
        }
        const std::string_view key = trim(std::string_view(line).substr(0, eq));
        const std::string_view value_raw = std::string_view(line).substr(eq + 1);
        const std::string_view value = trim(value_raw);
        if (key.empty()) {
            throw ConfigError("missing key before '='", line_no, static_cast<int>(first) + 1);
        }
        const int key_column = static_cast<int>(first) + 1;
        if (value.empty()) {
            throw ConfigError("empty value for key '" + std::string(key) + "'", line_no,
                              static_cast<int>(eq) + 2);
        }
        const int value_column =
            static_cast<int>(eq + 1 + static_cast<std::size_t>(value.data() - value_raw.data())) + 1;

        if (key != "segment" && !seen.insert(std::string(key)).second) {
            throw ConfigError("duplicate key '" + std::string(key) + "'", line_no, key_column);
        }

        const KeyContext ctx{line_no, key_column, value_column, value};
        if (key == "scenario") {
            if (value.find_first_of(" \t") != std::string_view::npos) {
                throw ConfigError("scenario name must be a single word", line_no, value_column);
            }
            config.scenario = std::string(value);
        } else if (key == "trials") {
            config.trials = static_cast<int>(
                parse_integer(value, line_no, value_column, 1, 100'000'000, "trials"));
        } else if (key == "seed") {
            std::uint64_t v = 0;
            const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc{} || ptr != value.data() + value.size()) {
                throw ConfigError("seed must be a nonnegative integer", line_no, value_column);
            }
            config.seed = v;
        } else if (key == "tau") {
            config.tau = parse_positive_real(value, line_no, value_column, "tau");
        } else if (key == "dt_max") {
            config.dt_max = parse_positive_real(value, line_no, value_column, "dt_max");
        } else if (key == "sample_times") {
            ExprParser parser{std::string(value), line_no, value_column - 1};
            std::vector<int> columns;
            const std::vector<Value> items = parser.parse_list(&columns);
            config.sample_times.clear();
            for (std::size_t i = 0; i < items.size(); ++i) {
                if (!items[i].is_real() || items[i].scalar.real() < 0.0) {
                    throw ConfigError("sample times must be nonnegative real numbers", line_no,
                                      columns[i]);
                }
                config.sample_times.push_back(items[i].scalar.real());
            }
        } else if (key == "out_dir") {
            config.out_dir = std::string(value);
        } else if (key == "dim") {
            config.dim = static_cast<int>(
                parse_integer(value, line_no, value_column, 1, kDefaultDimCap, "dim"));
        } else if (key == "labels") {
            parse_labels(config, ctx);
        } else if (key == "segment") {
            parse_segment(config, ctx);
        } else if (key == "state") {
            config.state = parse_state_vector(ctx);
        } else if (key == "coefficients") {
            config.coefficients = parse_scalar_list(ctx);
        } else if (key == "apparatus_ready") {
            config.apparatus_ready = parse_state_vector(ctx);
        } else if (key == "measurement") {
            parse_measurement_split(config, ctx);
        } else if (key == "initial_beable") {
            parse_initial_beable(config, ctx);
        } else {
            throw ConfigError("unknown key '" + std::string(key) + "'", line_no, key_column);
        }
    }

    if (config.scenario && config.has_inline_definition()) {
        throw ConfigError("config gives both a scenario name and an inline definition");
    }
    if (config.has_inline_definition() && config.segments.empty()) {
        throw ConfigError("inline definition needs at least one segment");
    }
    return config;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string serialize_config(const RunConfig& config) {
    std::ostringstream out;
    const auto vector_line = [&](const char* key, const Vector& v) {
        out << key << " = ";
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (i) out << ", ";
            out << fmt_complex(v(i));
        }
        out << "\n";
    };

    if (config.scenario) out << "scenario = " << *config.scenario << "\n";
    if (config.dim) out << "dim = " << *config.dim << "\n";
    if (!config.labels.empty()) {
        out << "labels = ";
        for (std::size_t i = 0; i < config.labels.size(); ++i) {
            if (i) out << ", ";
            out << config.labels[i];
        }
        out << "\n";
    }
    for (const SegmentSpec& seg : config.segments) {
        out << "segment = " << fmt_real(seg.duration) << " : [";
        for (Eigen::Index i = 0; i < seg.hamiltonian.rows(); ++i) {
            if (i) out << "; ";
            for (Eigen::Index j = 0; j < seg.hamiltonian.cols(); ++j) {
                if (j) out << ", ";
                out << fmt_complex(seg.hamiltonian(i, j));
            }
        }
        out << "]\n";
    }
    if (config.state) vector_line("state", *config.state);
    if (config.measurement_split) {
        out << "measurement = " << config.measurement_split->first << " x "
            << config.measurement_split->second << "\n";
    }
    if (config.apparatus_ready) vector_line("apparatus_ready", *config.apparatus_ready);
    if (!config.coefficients.empty()) {
        out << "coefficients = ";
        for (std::size_t i = 0; i < config.coefficients.size(); ++i) {
            if (i) out << ", ";
            out << fmt_complex(config.coefficients[i]);
        }
        out << "\n";
    }
    switch (config.initial_beable.kind) {
    case InitialBeableSpec::Kind::Default:
        break;
    case InitialBeableSpec::Kind::Born:
        out << "initial_beable = born\n";
        break;
    case InitialBeableSpec::Kind::FixedIndex:
        out << "initial_beable = fixed " << config.initial_beable.index << "\n";
        break;
    case InitialBeableSpec::Kind::FixedLabel:
        out << "initial_beable = fixed " << config.initial_beable.label << "\n";
        break;
    }
    out << "trials = " << config.trials << "\n";
    if (config.seed) out << "seed = " << *config.seed << "\n";
    out << "tau = " << fmt_real(config.tau) << "\n";
    out << "dt_max = " << fmt_real(config.dt_max) << "\n";
    if (!config.sample_times.empty()) {
        out << "sample_times = ";
        for (std::size_t i = 0; i < config.sample_times.size(); ++i) {
            if (i) out << ", ";
            out << fmt_real(config.sample_times[i]);
        }
        out << "\n";
    }
    out << "out_dir = " << config.out_dir << "\n";
    return out.str();
}

Scenario build_scenario(const RunConfig& config) {
    if (!(config.tau > 0.0) || !std::isfinite(config.tau)) {
        throw ConfigError("tau must be positive");
    }
    if (!(config.dt_max > 0.0) || !std::isfinite(config.dt_max)) {
        throw ConfigError("dt_max must be positive");
    }
    if (config.trials < 1) {
        throw ConfigError("trials must be at least 1");
    }
    const bool inline_def = config.has_inline_definition();
    if (config.scenario && inline_def) {
        throw ConfigError("config gives both a scenario name and an inline definition");
    }
    if (!config.scenario && !inline_def) {
        throw ConfigError("config needs a scenario name or an inline definition");
    }

    Scenario sc = config.scenario ? build_named(config) : build_inline(config);

    if (sc.default_initial_law.kind == InitialBeableLaw::Kind::Fixed) {
        const int idx = sc.default_initial_law.index;
        const double prob =
            sc.measurement
                ? std::norm(sc.default_system_coefficients[static_cast<std::size_t>(idx)])
                : sc.initial_state.probability(idx);
        if (prob <= tol::kZeroAmplitude) {
            throw ConfigError("the fixed initial beable value has zero amplitude in the initial state");
        }
    }

    const double total = sc.schedule.total_duration();
    const double eps = 1e-9 * (1.0 + total);
    for (const double t : config.sample_times) {
        const double t_abs = t * config.tau;
        if (t_abs < -eps || t_abs > total + eps) {
            throw ConfigError("sample time " + fmt_real(t) + " lies outside the schedule [0, " +
                              fmt_real(total / config.tau) + "] (in units of tau)");
        }
    }
    return sc;
}

Matrix parse_operator_expression(const std::string& text, int line) {
    ExprParser parser{text, line, 0};
    const Value v = parser.parse_full();
    if (!v.is_matrix()) {
        throw ConfigError("expected a matrix expression", line, 1);
    }
    return *v.matrix;
}

} // namespace beablesim
