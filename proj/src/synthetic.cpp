#include "tutorbench/synthetic.hpp"

#include <fmt/format.h>

#include <array>

#include "tutorbench/random.hpp"

namespace tutorbench {

namespace {

struct Step {
  std::string equation;
  std::string action;  // what the tutor would suggest to reach this step
  std::string skill;
  std::string hint;
};

struct Problem {
  std::string statement;
  std::vector<Step> steps;
};

std::string term(int coef) {
  if (coef == 1) return "x";
  if (coef == -1) return "-x";
  return fmt::format("{}x", coef);
}

std::string signed_const(int c) { return c < 0 ? fmt::format(" - {}", -c) : fmt::format(" + {}", c); }

int pick(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

// a(bx + c) - e = f
Problem distributive(Rng& rng) {
  const int a = pick(rng, 2, 5), b = pick(rng, 2, 4), c = pick(rng, 1, 9), x = pick(rng, 1, 6);
  const int e = pick(rng, 1, 9);
  const int f = a * (b * x + c) - e;
  Problem p;
  p.statement = fmt::format("{}({} + {}) - {} = {}", a, term(b), c, e, f);
  p.steps = {
      {fmt::format("{}({} + {}) = {}", a, term(b), c, f + e), fmt::format("Add {} to both sides", e),
       "add-const", fmt::format("How can you get rid of {} on the left?", e)},
      {fmt::format("{} + {} = {}", term(b), c, (f + e) / a),
       fmt::format("Divide by {} on both sides", a), "distribute-division",
       fmt::format("What happens if you divide both sides by {}?", a)},
      {fmt::format("{} = {}", term(b), (f + e) / a - c), fmt::format("Subtract {} from both sides", c),
       "subtract-const", fmt::format("How can you get rid of {} on the left?", c)},
      {fmt::format("x = {}", x), fmt::format("Divide by {} on both sides", b), "divide-const",
       fmt::format("What number is multiplied by x?")},
  };
  return p;
}

// ax + b = c
Problem two_step(Rng& rng) {
  const int a = pick(rng, 2, 9), x = pick(rng, -5, 9), b = pick(rng, -9, 12);
  const int c = a * x + b;
  Problem p;
  p.statement = fmt::format("{}{} = {}", term(a), signed_const(b), c);
  p.steps = {
      {fmt::format("{} = {}", term(a), c - b),
       b < 0 ? fmt::format("Add {} to both sides", -b) : fmt::format("Subtract {} from both sides", b),
       b < 0 ? "add-const" : "subtract-const",
       fmt::format("How can you get rid of {} on the left?", b < 0 ? -b : b)},
      {fmt::format("x = {}", x), fmt::format("Divide by {} on both sides", a), "divide-const",
       fmt::format("How can you get x by itself?")},
  };
  return p;
}

// ax + b = cx + d
Problem variables_both_sides(Rng& rng) {
  const int c = pick(rng, 1, 4), a = c + pick(rng, 1, 5), x = pick(rng, -4, 8), b = pick(rng, 1, 10);
  const int d = (a - c) * x + b;
  Problem p;
  p.statement = fmt::format("{} + {} = {} + {}", term(a), b, term(c), d);
  p.steps = {
      {fmt::format("{} + {} = {}", term(a - c), b, d), fmt::format("Subtract {} from both sides", term(c)),
       "combine-like-terms", "Can you get all the x terms on one side?"},
      {fmt::format("{} = {}", term(a - c), d - b), fmt::format("Subtract {} from both sides", b),
       "subtract-const", fmt::format("How can you get rid of {} on the left?", b)},
      {fmt::format("x = {}", x), fmt::format("Divide by {} on both sides", a - c), "divide-const",
       "What number is multiplied by x?"},
  };
  return p;
}

std::string wrong_version(const std::string& eq, Rng& rng) {
  // Perturb the last number in the equation.
  const auto pos = eq.find_last_of("0123456789");
  std::size_t start = pos;
  while (start > 0 && std::isdigit(static_cast<unsigned char>(eq[start - 1]))) --start;
  const int value = std::stoi(eq.substr(start, pos - start + 1));
  const int delta = pick(rng, 1, 3) * (uniform01(rng) < 0.5 ? -1 : 1);
  return eq.substr(0, start) + std::to_string(std::abs(value + delta) + (value + delta == 0)) +
         eq.substr(pos + 1);
}

constexpr std::array<std::string_view, 6> kStudentLines = {
    "can you help explain why this is incorrect?", "i don't know what to do next",
    "is this right?", "why do we divide here?", "should I subtract first?", "this one is hard"};
constexpr std::array<std::string_view, 6> kParentLines = {
    "you are missing a step on the constant", "what did the hint say?",
    "take your time and read it again", "good job so far", "what are you trying to get alone?",
    "look at the left side first"};

}  // namespace

Corpus make_synthetic_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Corpus corpus;
  corpus.source_path = "synthetic";
  for (std::size_t i = 0; i < n; ++i) {
    Problem prob;
    switch (uniform_below(rng, 3)) {
      case 0: prob = distributive(rng); break;
      case 1: prob = two_step(rng); break;
      default: prob = variables_both_sides(rng); break;
    }
    TutoringScenario s;
    s.scenario_id = fmt::format("syn-{:03}", i + 1);
    s.current_problem = prob.statement;
    const auto done = uniform_below(rng, prob.steps.size());
    for (std::size_t k = 0; k < done; ++k) s.correct_steps.push_back(prob.steps[k].equation);
    const Step& next = prob.steps[done];
    if (uniform01(rng) < 0.55) {
      const auto wrong = 1 + uniform_below(rng, 2);
      for (std::size_t k = 0; k < wrong; ++k) s.incorrect_steps.push_back(wrong_version(next.equation, rng));
    }
    if (uniform01(rng) < 0.4) {
      s.hints.push_back(next.hint);
      if (uniform01(rng) < 0.3) s.hints.push_back(fmt::format("{}.", next.action));
    }
    if (uniform01(rng) < 0.9) {
      s.next_step_suggestion.push_back(fmt::format("{}: {}", next.action, next.equation));
    }
    s.knowledge_components.push_back(next.skill);
    if (done > 0 && uniform01(rng) < 0.5) s.knowledge_components.push_back(prob.steps[done - 1].skill);
    const auto turns = uniform_below(rng, 4);
    for (std::size_t k = 0; k < turns; ++k) {
      if (k % 2 == 0) {
        s.chat_history.push_back(
            {Speaker::Student, std::string(kStudentLines[uniform_below(rng, kStudentLines.size())])});
      } else {
        s.chat_history.push_back(
            {Speaker::Parent, std::string(kParentLines[uniform_below(rng, kParentLines.size())])});
      }
    }
    corpus.scenarios.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace tutorbench
