#include "orbitavg/io.hpp"

#include <cctype>
#include <fstream>

using nlohmann::json;

namespace orbitavg {

namespace {

std::string rat_str(const Rational& r) {
    return r.get_str();
}

void emit_part(json& t, const char* key, const char* key2, const PiPoly& p) {
    Ext e = p.c.empty() ? Ext() : p.c[0];
    t[key] = rat_str(e.a);
    if (e.b != 0) t[key2] = rat_str(e.b);
}

std::string float_str(double v) {
    char buf[40];
    snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool looks_float(const std::string& s) {
    return s.find('.') != std::string::npos || s.find('e') != std::string::npos ||
           s.find('E') != std::string::npos || s == "inf" || s == "-inf" || s == "nan";
}

}  // namespace

json symbol_to_json(const PolySymbol& p) {
    json j;
    j["n"] = p.n();
    j["frame"] = frame_name(p.frame());
    j["terms"] = json::array();
    for (const auto& [m, c] : p.terms()) {
        json t;
        t["xexp"] = std::vector<int>(m.e.begin(), m.e.begin() + p.n());
        t["kexp"] = std::vector<int>(m.e.begin() + p.n(), m.e.end());
        bool exact_ok = c.exact() && c.exact_value().re.is_pi_free() &&
                        c.exact_value().im.is_pi_free();
        if (exact_ok) {
            emit_part(t, "re", "re_sqrt2", c.exact_value().re);
            emit_part(t, "im", "im_sqrt2", c.exact_value().im);
        } else {
            auto v = c.value();
            t["re"] = float_str(v.real());
            t["im"] = float_str(v.imag());
        }
        j["terms"].push_back(std::move(t));
    }
    return j;
}

PolySymbol symbol_from_json(const json& j) {
    int n = j.at("n").get<int>();
    std::string fr = j.at("frame").get<std::string>();
    Frame frame;
    if (fr == "xk") frame = Frame::xk;
    else if (fr == "yeta") frame = Frame::yeta;
    else throw std::invalid_argument("symbol_from_json: unknown frame " + fr);
    PolySymbol p(n, frame);
    for (const auto& t : j.at("terms")) {
        auto xe = t.at("xexp").get<std::vector<int>>();
        auto ke = t.at("kexp").get<std::vector<int>>();
        if (static_cast<int>(xe.size()) != n || static_cast<int>(ke.size()) != n)
            throw std::invalid_argument("symbol_from_json: exponent length mismatch");
        Monomial m(xe, ke);
        std::string re = t.value("re", "0"), im = t.value("im", "0");
        bool flt = looks_float(re) || looks_float(im);
        if (flt) {
            p.add_term(m, Coeff(std::complex<double>(std::stod(re), std::stod(im))));
        } else {
            Ext er{Rational(re)}, ei{Rational(im)};
            if (t.contains("re_sqrt2")) er.b = Rational(t.at("re_sqrt2").get<std::string>());
            if (t.contains("im_sqrt2")) ei.b = Rational(t.at("im_sqrt2").get<std::string>());
            er.a.canonicalize(); er.b.canonicalize();
            ei.a.canonicalize(); ei.b.canonicalize();
            p.add_term(m, Coeff(ExactC(er, ei)));
        }
    }
    return p;
}

std::string symbol_to_json_string(const PolySymbol& p) {
    return symbol_to_json(p).dump(2);
}

PolySymbol symbol_from_json_string(const std::string& s) {
    return symbol_from_json(json::parse(s));
}

PolySymbol load_symbol(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return symbol_from_json(j);
}

void save_symbol(const PolySymbol& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << symbol_to_json(p).dump(2) << "\n";
}

// ---- expression parser ----

namespace {

struct Parser {
    const std::string& s;
    size_t pos = 0;
    int nmax = 0;
    bool saw_osc = false, saw_xk = false;

    explicit Parser(const std::string& str) : s(str) {}

    void skip() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
        skip();
        if (pos < s.size() && s[pos] == c) { ++pos; return true; }
        return false;
    }
    [[noreturn]] void fail(const std::string& what) {
        throw std::invalid_argument("parse error at position " + std::to_string(pos) +
                                    ": " + what);
    }

    // first pass only scans variables to infer n; the real parse builds
    // PolySymbols directly with a fixed n
    PolySymbol parse(int n_fixed) {
        scan_vars();
        if (n_fixed == 0) n_fixed = std::max(nmax, 1);
        pos = 0;
        Frame fr = saw_osc && !saw_xk ? Frame::yeta : Frame::xk;
        frame = fr;
        n = n_fixed;
        PolySymbol r = expr();
        skip();
        if (pos != s.size()) fail("trailing input");
        return r;
    }

    int n = 1;
    Frame frame = Frame::xk;

    void scan_vars() {
        for (pos = 0; pos < s.size(); ++pos) {
            char c = s[pos];
            if ((c == 'x' || c == 'k' || c == 'y' || c == 'n') && pos + 1 < s.size() &&
                std::isdigit(static_cast<unsigned char>(s[pos + 1]))) {
                size_t q = pos + 1;
                int idx = 0;
                while (q < s.size() && std::isdigit(static_cast<unsigned char>(s[q])))
                    idx = idx * 10 + (s[q++] - '0');
                nmax = std::max(nmax, idx);
                if (c == 'y' || c == 'n') saw_osc = true;
                else saw_xk = true;
                pos = q - 1;
            }
        }
    }

    PolySymbol expr() {
        PolySymbol r = eat('-') ? -term() : term();
        for (;;) {
            if (eat('+')) r = r + term();
            else if (eat('-')) r = r - term();
            else return r;
        }
    }

    PolySymbol term() {
        PolySymbol r = power();
        for (;;) {
            skip();
            if (eat('*')) r = r * power();
            else return r;
        }
    }

    PolySymbol power() {
        PolySymbol b = factor();
        if (eat('^')) {
            skip();
            size_t q = pos;
            int e = 0;
            while (q < s.size() && std::isdigit(static_cast<unsigned char>(s[q])))
                e = e * 10 + (s[q++] - '0');
            if (q == pos) fail("expected integer exponent");
            pos = q;
            PolySymbol r = PolySymbol::constant(n, Coeff(ExactC(1)), frame);
            for (int j = 0; j < e; ++j) r = r * b;
            return r;
        }
        return b;
    }

    PolySymbol factor() {
        skip();
        if (pos >= s.size()) fail("unexpected end of input");
        char c = s[pos];
        if (c == '(') {
            ++pos;
            PolySymbol r = expr();
            if (!eat(')')) fail("expected ')'");
            return r;
        }
        if (c == '-') { ++pos; return -factor(); }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (c == 'i' && !(pos + 1 < s.size() &&
                          std::isdigit(static_cast<unsigned char>(s[pos + 1])))) {
            ++pos;
            return PolySymbol::constant(n, Coeff(ExactC::i()), frame);
        }
        if (c == 'x' || c == 'k' || c == 'y' || c == 'n') {
            size_t q = pos + 1;
            int idx = 0;
            while (q < s.size() && std::isdigit(static_cast<unsigned char>(s[q])))
                idx = idx * 10 + (s[q++] - '0');
            if (idx == 0) fail("expected variable index");
            if (idx > n) fail("variable index exceeds dimension");
            pos = q;
            bool position = (c == 'x' || c == 'y');
            bool osc = (c == 'y' || c == 'n');
            if (osc != (frame == Frame::yeta)) fail("mixed-frame expression");
            return position ? PolySymbol::position(n, idx - 1, frame)
                            : PolySymbol::momentum(n, idx - 1, frame);
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    PolySymbol number() {
        size_t q = pos;
        bool flt = false;
        while (q < s.size() && (std::isdigit(static_cast<unsigned char>(s[q])) ||
                                s[q] == '.' || s[q] == 'e' || s[q] == 'E' ||
                                ((s[q] == '+' || s[q] == '-') && q > pos &&
                                 (s[q - 1] == 'e' || s[q - 1] == 'E')))) {
            if (!std::isdigit(static_cast<unsigned char>(s[q]))) flt = true;
            ++q;
        }
        std::string num = s.substr(pos, q - pos);
        pos = q;
        if (flt)
            return PolySymbol::constant(n, Coeff(std::stod(num)), frame);
        // integer; a following '/' integer makes it a rational
        skip();
        if (pos < s.size() && s[pos] == '/' && pos + 1 < s.size() &&
            std::isdigit(static_cast<unsigned char>(s[pos + 1]))) {
            ++pos;
            size_t r = pos;
            while (r < s.size() && std::isdigit(static_cast<unsigned char>(s[r]))) ++r;
            std::string den = s.substr(pos, r - pos);
            pos = r;
            Rational v(num + "/" + den);
            v.canonicalize();
            return PolySymbol::constant(n, Coeff(ExactC(v)), frame);
        }
        return PolySymbol::constant(n, Coeff(ExactC(Rational(num))), frame);
    }
};

}  // namespace

PolySymbol parse_expression(const std::string& text, int n) {
    Parser p(text);
    return p.parse(n);
}

}  // namespace orbitavg
