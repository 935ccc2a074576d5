#include "ngcg/expression.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ngcg {

int op_arity(Op op) {
  switch (op) {
    case Op::Const:
    case Op::Var:
      return 0;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
      return 2;
    default:
      return 1;
  }
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Var: return "var";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Sq: return "sq";
    case Op::Cube: return "cube";
    case Op::Sqrt: return "sqrt";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
  }
  return "?";
}

std::size_t Expression::subtree_end(std::size_t i) const {
  std::size_t need = 1, j = i;
  while (need > 0) {
    if (j >= nodes.size()) throw std::logic_error("malformed expression");
    need += static_cast<std::size_t>(op_arity(nodes[j].op));
    --need;
    ++j;
  }
  return j;
}

std::size_t Expression::depth() const {
  // prefix walk with an explicit arity stack
  std::vector<std::size_t> pending;  // children still owed at each level
  std::size_t max_d = 0;
  for (const auto& n : nodes) {
    max_d = std::max(max_d, pending.size() + 1);
    int a = op_arity(n.op);
    if (a > 0) {
      pending.push_back(static_cast<std::size_t>(a));
    } else {
      while (!pending.empty() && --pending.back() == 0) pending.pop_back();
    }
  }
  return max_d;
}

bool Expression::references_variable() const {
  for (const auto& n : nodes)
    if (n.op == Op::Var) return true;
  return false;
}

bool Expression::well_formed(std::size_t n_vars) const {
  if (nodes.empty()) return false;
  long need = 1;
  for (const auto& n : nodes) {
    if (need <= 0) return false;
    if (n.op == Op::Var && n.var >= n_vars) return false;
    need += op_arity(n.op) - 1;
  }
  return need == 0;
}

Expression Expression::constant(double v) {
  Expression e;
  e.nodes.push_back({Op::Const, v, 0});
  return e;
}

Expression Expression::variable(std::size_t idx) {
  Expression e;
  e.nodes.push_back({Op::Var, 0.0, static_cast<std::uint16_t>(idx)});
  return e;
}

Expression Expression::unary(Op op, Expression a) {
  Expression e;
  e.nodes.push_back({op, 0.0, 0});
  e.nodes.insert(e.nodes.end(), a.nodes.begin(), a.nodes.end());
  return e;
}

Expression Expression::binary(Op op, Expression a, Expression b) {
  Expression e;
  e.nodes.push_back({op, 0.0, 0});
  e.nodes.insert(e.nodes.end(), a.nodes.begin(), a.nodes.end());
  e.nodes.insert(e.nodes.end(), b.nodes.begin(), b.nodes.end());
  return e;
}

namespace {

double apply_unary(Op op, double a) {
  switch (op) {
    case Op::Sq: return a * a;
    case Op::Cube: return a * a * a;
    case Op::Sqrt: return a < 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::sqrt(a);
    case Op::Exp: return std::exp(a);
    case Op::Log: return a <= 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::log(a);
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    default: return std::numeric_limits<double>::quiet_NaN();
  }
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div:
      return std::abs(b) < kDivGuard ? std::numeric_limits<double>::quiet_NaN() : a / b;
    default: return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

double Expression::eval(std::span<const double> x) const {
  // scan the prefix array right-to-left with a value stack
  double stack[128];
  int top = -1;
  for (std::size_t idx = nodes.size(); idx-- > 0;) {
    const auto& n = nodes[idx];
    switch (op_arity(n.op)) {
      case 0:
        if (top + 1 >= 128) return std::numeric_limits<double>::quiet_NaN();
        stack[++top] = n.op == Op::Const ? n.value : x[n.var];
        break;
      case 1:
        stack[top] = apply_unary(n.op, stack[top]);
        break;
      default: {
        double a = stack[top--];  // left operand was pushed last
        double b = stack[top];
        stack[top] = apply_binary(n.op, a, b);
        break;
      }
    }
  }
  return stack[0];
}

void Expression::eval_batch(std::span<const double> X, std::size_t n, std::size_t n_vars,
                            std::span<double> out) const {
  // vectorized stack machine over all samples at once
  static thread_local std::vector<std::vector<double>> pool;
  std::size_t top = 0;
  auto slot = [&](std::size_t level) -> std::vector<double>& {
    if (pool.size() <= level) pool.resize(level + 1);
    pool[level].resize(n);
    return pool[level];
  };
  for (std::size_t idx = nodes.size(); idx-- > 0;) {
    const auto& node = nodes[idx];
    switch (op_arity(node.op)) {
      case 0: {
        auto& dst = slot(top++);
        if (node.op == Op::Const) {
          std::fill(dst.begin(), dst.end(), node.value);
        } else {
          const double* src = X.data() + node.var;
          for (std::size_t i = 0; i < n; ++i) dst[i] = src[i * n_vars];
        }
        break;
      }
      case 1: {
        auto& a = pool[top - 1];
        switch (node.op) {
          case Op::Sq:
            for (auto& v : a) v = v * v;
            break;
          case Op::Cube:
            for (auto& v : a) v = v * v * v;
            break;
          case Op::Sqrt:
            for (auto& v : a)
              v = v < 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::sqrt(v);
            break;
          case Op::Exp:
            for (auto& v : a) v = std::exp(v);
            break;
          case Op::Log:
            for (auto& v : a)
              v = v <= 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::log(v);
            break;
          case Op::Sin:
            for (auto& v : a) v = std::sin(v);
            break;
          case Op::Cos:
            for (auto& v : a) v = std::cos(v);
            break;
          default:
            break;
        }
        break;
      }
      default: {
        auto& a = pool[top - 1];  // left
        auto& b = pool[top - 2];  // right
        switch (node.op) {
          case Op::Add:
            for (std::size_t i = 0; i < n; ++i) b[i] = a[i] + b[i];
            break;
          case Op::Sub:
            for (std::size_t i = 0; i < n; ++i) b[i] = a[i] - b[i];
            break;
          case Op::Mul:
            for (std::size_t i = 0; i < n; ++i) b[i] = a[i] * b[i];
            break;
          case Op::Div:
            for (std::size_t i = 0; i < n; ++i)
              b[i] = std::abs(b[i]) < kDivGuard ? std::numeric_limits<double>::quiet_NaN()
                                                : a[i] / b[i];
            break;
          default:
            break;
        }
        --top;
        break;
      }
    }
  }
  std::copy(pool[0].begin(), pool[0].end(), out.begin());
}

namespace {

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string Expression::to_string() const {
  std::string out;
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (!out.empty() && out.back() != '(') out += ' ';
    int a = op_arity(n.op);
    if (a == 0) {
      if (n.op == Op::Const)
        out += format_double(n.value);
      else
        out += "x" + std::to_string(n.var + 1);
      while (!pending.empty() && --pending.back() == 0) {
        out += ')';
        pending.pop_back();
      }
    } else {
      out += '(';
      out += op_name(n.op);
      pending.push_back(static_cast<std::size_t>(a));
    }
  }
  return out;
}

namespace {

struct Parser {
  const std::string& s;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\n')) ++pos;
  }

  std::string token() {
    skip_ws();
    std::size_t start = pos;
    while (pos < s.size() && s[pos] != ' ' && s[pos] != '(' && s[pos] != ')') ++pos;
    return s.substr(start, pos - start);
  }

  void parse_into(std::vector<ExprNode>& nodes) {
    skip_ws();
    if (pos >= s.size()) throw std::invalid_argument("expression parse: unexpected end");
    if (s[pos] == '(') {
      ++pos;
      std::string name = token();
      Op op;
      if (name == "add") op = Op::Add;
      else if (name == "sub") op = Op::Sub;
      else if (name == "mul") op = Op::Mul;
      else if (name == "div") op = Op::Div;
      else if (name == "sq") op = Op::Sq;
      else if (name == "cube") op = Op::Cube;
      else if (name == "sqrt") op = Op::Sqrt;
      else if (name == "exp") op = Op::Exp;
      else if (name == "log") op = Op::Log;
      else if (name == "sin") op = Op::Sin;
      else if (name == "cos") op = Op::Cos;
      else throw std::invalid_argument("expression parse: unknown operator " + name);
      nodes.push_back({op, 0.0, 0});
      for (int a = 0; a < op_arity(op); ++a) parse_into(nodes);
      skip_ws();
      if (pos >= s.size() || s[pos] != ')')
        throw std::invalid_argument("expression parse: missing )");
      ++pos;
    } else {
      std::string tok = token();
      if (tok.empty()) throw std::invalid_argument("expression parse: empty token");
      if (tok[0] == 'x' && tok.size() > 1 && tok[1] >= '0' && tok[1] <= '9') {
        int idx = std::stoi(tok.substr(1));
        if (idx < 1) throw std::invalid_argument("expression parse: bad variable " + tok);
        nodes.push_back({Op::Var, 0.0, static_cast<std::uint16_t>(idx - 1)});
      } else {
        double v = 0.0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
          throw std::invalid_argument("expression parse: bad number " + tok);
        nodes.push_back({Op::Const, v, 0});
      }
    }
  }
};

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  Parser p{text};
  p.parse_into(e.nodes);
  p.skip_ws();
  if (p.pos != text.size()) throw std::invalid_argument("expression parse: trailing input");
  return e;
}

Expression affine_wrap(const Expression& e, double a, double b) {
  if (a == 0.0) return Expression::constant(b);
  Expression scaled = std::abs(a - 1.0) < 1e-12 ? e
                                                : Expression::binary(Op::Mul,
                                                                     Expression::constant(a), e);
  if (std::abs(b) < 1e-12) return scaled;
  return Expression::binary(Op::Add, std::move(scaled), Expression::constant(b));
}

}  // namespace ngcg
