#include "vqdd/vnnlib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>

#include "vqdd/errors.hpp"
#include "vqdd/numeric_text.hpp"
#include "vqdd/sexpr.hpp"

namespace vqdd {

namespace {

// Linear combination over the input (x) and output (y) variables.
struct LinearExpr {
    std::map<int, double> x;
    std::map<int, double> y;
    double constant = 0.0;

    bool pure_constant() const { return x.empty() && y.empty(); }
};

struct VarRef {
    bool is_input;
    int index;
};

std::optional<VarRef> classify_variable(std::string_view name) {
    if (name.size() < 3) return std::nullopt;
    const bool is_input = name[0] == 'X';
    if (!is_input && name[0] != 'Y') return std::nullopt;
    if (name[1] != '_') return std::nullopt;
    if (name.size() > 9) return std::nullopt;  // keeps the index well inside int range
    int index = 0;
    for (std::size_t i = 2; i < name.size(); ++i) {
        if (name[i] < '0' || name[i] > '9') return std::nullopt;
        index = index * 10 + (name[i] - '0');
    }
    return VarRef{is_input, index};
}

class PropertyBuilder {
public:
    explicit PropertyBuilder(std::string_view text) : forms_(parse_sexprs(text)) {}

    Property build() {
        for (const Sexpr& form : forms_) handle_form(form);
        return assemble();
    }

private:
    std::vector<Sexpr> forms_;
    std::set<int> declared_x_;
    std::set<int> declared_y_;
    std::map<int, double> lower_;
    std::map<int, double> upper_;

    // Output constraints, kept as coefficient maps until arities are known.
    struct PendingIneq {
        std::map<int, double> coeffs;
        Relation relation;
        double bound;
    };
    std::vector<PendingIneq> base_;
    std::vector<std::vector<PendingIneq>> disjuncts_;
    bool have_or_ = false;
    bool region_false_ = false;

    [[noreturn]] static void fail(const std::string& message, const Sexpr& at) {
        throw ParseError(message, at.line, at.column);
    }

    static const Sexpr& head_of(const Sexpr& list) {
        if (!list.is_list || list.items.empty() || !list.items[0].is_atom())
            fail("expected an s-expression command", list);
        return list.items[0];
    }

    void handle_form(const Sexpr& form) {
        const Sexpr& head = head_of(form);
        if (head.atom == "declare-const") {
            handle_declare(form);
        } else if (head.atom == "assert") {
            if (form.items.size() != 2) fail("assert takes exactly one argument", form);
            handle_assert(form.items[1]);
        } else {
            fail("unknown command '" + head.atom + "'", head);
        }
    }

    void handle_declare(const Sexpr& form) {
        if (form.items.size() != 3 || !form.items[1].is_atom() || !form.items[2].is_atom())
            fail("expected (declare-const <name> Real)", form);
        if (form.items[2].atom != "Real")
            fail("only Real constants are supported", form.items[2]);
        const auto var = classify_variable(form.items[1].atom);
        if (!var) fail("unknown symbol '" + form.items[1].atom + "'", form.items[1]);
        auto& declared = var->is_input ? declared_x_ : declared_y_;
        if (!declared.insert(var->index).second)
            fail("duplicate declaration of '" + form.items[1].atom + "'", form.items[1]);
    }

    void handle_assert(const Sexpr& arg) {
        if (arg.is_atom()) {
            if (arg.atom == "false") {
                region_false_ = true;
                return;
            }
            if (arg.atom == "true") return;
            fail("expected an inequality", arg);
        }
        const Sexpr& head = head_of(arg);
        if (head.atom == "<=" || head.atom == ">=") {
            handle_atom(arg, nullptr);
        } else if (head.atom == "and") {
            for (std::size_t i = 1; i < arg.items.size(); ++i) handle_atom(arg.items[i], nullptr);
        } else if (head.atom == "or") {
            if (have_or_) fail("multiple disjunctive asserts are not supported", arg);
            have_or_ = true;
            for (std::size_t i = 1; i < arg.items.size(); ++i) handle_disjunct(arg.items[i]);
        } else {
            fail("unsupported assert form '" + head.atom + "'", head);
        }
    }

    void handle_disjunct(const Sexpr& form) {
        if (form.is_atom()) {
            if (form.atom == "true") {
                disjuncts_.emplace_back();  // accepts every output
                return;
            }
            if (form.atom == "false") return;  // contributes nothing
            fail("expected an inequality or (and ...)", form);
        }
        const Sexpr& head = head_of(form);
        disjuncts_.emplace_back();
        if (head.atom == "and") {
            for (std::size_t i = 1; i < form.items.size(); ++i)
                handle_atom(form.items[i], &disjuncts_.back());
        } else if (head.atom == "<=" || head.atom == ">=") {
            handle_atom(form, &disjuncts_.back());
        } else {
            fail("unsupported disjunct form '" + head.atom + "'", head);
        }
    }

    // One <= / >= atom. `disjunct` is null for top-level (conjunctive) asserts.
    void handle_atom(const Sexpr& form, std::vector<PendingIneq>* disjunct) {
        if (form.is_atom()) fail("expected an inequality", form);
        const Sexpr& head = head_of(form);
        if (head.atom != "<=" && head.atom != ">=")
            fail("expected '<=' or '>='", head);
        if (form.items.size() != 3) fail("inequalities take exactly two operands", form);

        const LinearExpr lhs = fold(form.items[1]);
        const LinearExpr rhs = fold(form.items[2]);
        LinearExpr diff;
        diff.constant = lhs.constant - rhs.constant;
        diff.x = lhs.x;
        diff.y = lhs.y;
        for (const auto& [i, c] : rhs.x) diff.x[i] -= c;
        for (const auto& [i, c] : rhs.y) diff.y[i] -= c;
        for (auto it = diff.x.begin(); it != diff.x.end();)
            it = it->second == 0.0 ? diff.x.erase(it) : std::next(it);
        for (auto it = diff.y.begin(); it != diff.y.end();)
            it = it->second == 0.0 ? diff.y.erase(it) : std::next(it);

        Relation relation = head.atom == "<=" ? Relation::LessEq : Relation::GreaterEq;
        const double bound = -diff.constant;

        if (!diff.x.empty() && !diff.y.empty())
            fail("constraint mixes input and output variables", form);

        if (!diff.x.empty()) {
            if (disjunct)
                fail("input bounds may not appear inside a disjunction", form);
            if (diff.x.size() != 1)
                fail("input constraints must bound a single variable", form);
            const auto [index, coeff] = *diff.x.begin();
            double value = bound / coeff;
            if (coeff < 0.0)
                relation = relation == Relation::LessEq ? Relation::GreaterEq : Relation::LessEq;
            if (relation == Relation::LessEq) {
                const auto it = upper_.find(index);
                upper_[index] = it == upper_.end() ? value : std::min(it->second, value);
            } else {
                const auto it = lower_.find(index);
                lower_[index] = it == lower_.end() ? value : std::max(it->second, value);
            }
            return;
        }

        if (diff.y.empty()) fail("constraint references no variables", form);
        PendingIneq ineq{diff.y, relation, bound};
        if (disjunct)
            disjunct->push_back(std::move(ineq));
        else
            base_.push_back(std::move(ineq));
    }

    LinearExpr fold(const Sexpr& expr) {
        LinearExpr result;
        if (expr.is_atom()) {
            double value = 0.0;
            if (try_parse_double(expr.atom, value)) {
                result.constant = value;
                return result;
            }
            const auto var = classify_variable(expr.atom);
            if (!var) fail("unknown symbol '" + expr.atom + "'", expr);
            const auto& declared = var->is_input ? declared_x_ : declared_y_;
            if (!declared.count(var->index))
                fail("use of undeclared variable '" + expr.atom + "'", expr);
            (var->is_input ? result.x : result.y)[var->index] = 1.0;
            return result;
        }

        const Sexpr& head = head_of(expr);
        if (head.atom == "+") {
            for (std::size_t i = 1; i < expr.items.size(); ++i) add(result, fold(expr.items[i]), 1.0);
            return result;
        }
        if (head.atom == "-") {
            if (expr.items.size() < 2) fail("'-' needs at least one operand", expr);
            add(result, fold(expr.items[1]), expr.items.size() == 2 ? -1.0 : 1.0);
            for (std::size_t i = 2; i < expr.items.size(); ++i)
                add(result, fold(expr.items[i]), -1.0);
            return result;
        }
        if (head.atom == "*") {
            if (expr.items.size() != 3) fail("'*' takes exactly two operands", expr);
            const LinearExpr a = fold(expr.items[1]);
            const LinearExpr b = fold(expr.items[2]);
            if (a.pure_constant()) {
                add(result, b, a.constant);
                return result;
            }
            if (b.pure_constant()) {
                add(result, a, b.constant);
                return result;
            }
            fail("non-linear term", expr);
        }
        fail("unsupported operator '" + head.atom + "'", head);
    }

    static void add(LinearExpr& into, const LinearExpr& other, double scale) {
        into.constant += scale * other.constant;
        for (const auto& [i, c] : other.x) into.x[i] += scale * c;
        for (const auto& [i, c] : other.y) into.y[i] += scale * c;
    }

    Property assemble() {
        if (declared_x_.empty()) throw ParseError("no input variables declared", 1, 1);
        if (declared_y_.empty()) throw ParseError("no output variables declared", 1, 1);
        const int input_dim = *declared_x_.rbegin() + 1;
        const int output_dim = *declared_y_.rbegin() + 1;
        if (static_cast<int>(declared_x_.size()) != input_dim)
            throw ParseError("input variables must be declared contiguously from X_0", 1, 1);
        if (static_cast<int>(declared_y_.size()) != output_dim)
            throw ParseError("output variables must be declared contiguously from Y_0", 1, 1);

        std::vector<Interval> box(input_dim);
        for (int i = 0; i < input_dim; ++i) {
            const auto lo = lower_.find(i);
            const auto hi = upper_.find(i);
            if (lo == lower_.end() || hi == upper_.end())
                throw ParseError("missing input bound for X_" + std::to_string(i), 1, 1);
            if (lo->second > hi->second)
                throw ParseError("contradictory bounds for X_" + std::to_string(i), 1, 1);
            box[i] = {lo->second, hi->second};
        }

        const auto to_inequality = [output_dim](const PendingIneq& pending) {
            LinearInequality ineq;
            ineq.coeffs = Eigen::VectorXd::Zero(output_dim);
            for (const auto& [j, c] : pending.coeffs) {
                if (j >= output_dim)
                    throw ParseError("output index Y_" + std::to_string(j) + " out of range", 1, 1);
                ineq.coeffs(j) = c;
            }
            ineq.relation = pending.relation;
            ineq.bound = pending.bound;
            return ineq;
        };

        std::vector<Conjunction> region;
        if (!region_false_) {
            if (have_or_) {
                for (const auto& pending_disjunct : disjuncts_) {
                    Conjunction conjunct;
                    for (const PendingIneq& p : base_) conjunct.push_back(to_inequality(p));
                    for (const PendingIneq& p : pending_disjunct)
                        conjunct.push_back(to_inequality(p));
                    region.push_back(std::move(conjunct));
                }
            } else {
                Conjunction conjunct;
                for (const PendingIneq& p : base_) conjunct.push_back(to_inequality(p));
                region.push_back(std::move(conjunct));
            }
        }

        return Property(std::move(box), output_dim, std::move(region));
    }
};

void emit_inequality_atom(std::string& out, const LinearInequality& ineq) {
    out += ineq.relation == Relation::LessEq ? "(<= " : "(>= ";
    int nonzero = 0;
    int unit_index = -1;
    for (int j = 0; j < ineq.coeffs.size(); ++j) {
        if (ineq.coeffs(j) != 0.0) {
            ++nonzero;
            unit_index = j;
        }
    }
    if (nonzero == 1 && ineq.coeffs(unit_index) == 1.0) {
        out += "Y_" + std::to_string(unit_index);
    } else if (nonzero == 0) {
        out += "(* 0.0 Y_0)";
    } else {
        out += "(+";
        for (int j = 0; j < ineq.coeffs.size(); ++j) {
            if (ineq.coeffs(j) == 0.0) continue;
            out += " (* " + format_double_decimal(ineq.coeffs(j)) + " Y_" + std::to_string(j) + ")";
        }
        out += ")";
    }
    out += " " + format_double_decimal(ineq.bound) + ")";
}

}  // namespace

Property parse_vnnlib(std::string_view text) { return PropertyBuilder(text).build(); }

std::string emit_vnnlib(const Property& property) {
    std::string out;
    for (int i = 0; i < property.input_dim(); ++i)
        out += "(declare-const X_" + std::to_string(i) + " Real)\n";
    for (int j = 0; j < property.output_dim(); ++j)
        out += "(declare-const Y_" + std::to_string(j) + " Real)\n";

    for (int i = 0; i < property.input_dim(); ++i) {
        const Interval& interval = property.input_box()[i];
        out += "(assert (>= X_" + std::to_string(i) + " " + format_double_decimal(interval.lower) + "))\n";
        out += "(assert (<= X_" + std::to_string(i) + " " + format_double_decimal(interval.upper) + "))\n";
    }

    const auto& region = property.output_region();
    if (region.empty()) {
        out += "(assert false)\n";
    } else if (region.size() == 1) {
        for (const LinearInequality& ineq : region[0]) {
            out += "(assert ";
            emit_inequality_atom(out, ineq);
            out += ")\n";
        }
    } else {
        out += "(assert (or";
        for (const Conjunction& conjunct : region) {
            if (conjunct.empty()) {
                out += " true";
            } else if (conjunct.size() == 1) {
                out += " ";
                emit_inequality_atom(out, conjunct[0]);
            } else {
                out += " (and";
                for (const LinearInequality& ineq : conjunct) {
                    out += " ";
                    emit_inequality_atom(out, ineq);
                }
                out += ")";
            }
        }
        out += "))\n";
    }
    return out;
}

}  // namespace vqdd
