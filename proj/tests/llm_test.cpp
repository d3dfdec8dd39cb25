#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>
#include <vector>

#include "cwu/llm.hpp"
#include "cwu/tokenizer.hpp"

namespace {

struct CountingProvider final : cwu::GenerationProvider {
  int calls = 0;

 protected:
  cwu::GenerationOutcome generate_unchecked(const cwu::ModelProfile&,
                                            const cwu::Prompt&) override {
    ++calls;
    return {cwu::GenerationStatus::ok, "stub answer", 0};
  }
};

}  // namespace

TEST_CASE("assemble_prompt with no chunks", "[llm]") {
  const auto p = cwu::assemble_prompt("What is up?", {});
  CHECK(p.context_chunks.empty());
  CHECK(p.user_text.find("Context:\n\n") != std::string::npos);
  CHECK(p.user_text.find("Question: What is up?") != std::string::npos);
  CHECK(p.prompt_tokens == cwu::count_tokens(p.rendered));
}

TEST_CASE("assemble_prompt contains its chunks in order", "[llm]") {
  std::string c1 = "alpha beta gamma delta epsilon zeta eta theta iota kappa";
  std::string c2 = "one two three four five six seven eight nine ten";
  const auto p = cwu::assemble_prompt("How many?", {c1, c2});
  CHECK(p.prompt_tokens >= 20);
  const auto pos1 = p.rendered.find(c1);
  const auto pos2 = p.rendered.find(c2);
  REQUIRE(pos1 != std::string::npos);
  REQUIRE(pos2 != std::string::npos);
  CHECK(pos1 < pos2);
  CHECK(p.rendered.find("\n\n---\n\n") != std::string::npos);
}

TEST_CASE("prompt token count survives a recount", "[llm]") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> nchunks(0, 5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> chunks;
    for (int i = 0, n = nchunks(rng); i < n; ++i) {
      chunks.push_back("chunk " + std::to_string(rng() % 1000) + " text body.");
    }
    const auto p = cwu::assemble_prompt("Why " + std::to_string(rng() % 100) + "?",
                                        std::move(chunks));
    CHECK(p.prompt_tokens == cwu::count_tokens(p.rendered));
  }
}

TEST_CASE("budget boundary forces overflow without a provider call", "[llm]") {
  CountingProvider provider;
  auto prompt = cwu::assemble_prompt("question?", {"some context words here"});
  cwu::ModelProfile profile;
  profile.context_length = prompt.prompt_tokens;  // U == L
  profile.max_output_tokens = 1;
  const auto outcome = provider.generate(profile, prompt);
  CHECK(outcome.status == cwu::GenerationStatus::context_overflow);
  CHECK(provider.calls == 0);

  profile.context_length = prompt.prompt_tokens + 1;  // exactly fits
  const auto ok = provider.generate(profile, prompt);
  CHECK(ok.status == cwu::GenerationStatus::ok);
  CHECK(ok.answer == "stub answer");
  CHECK(provider.calls == 1);
}

TEST_CASE("mock returns the planted sentence", "[llm]") {
  const auto p = cwu::assemble_prompt("What is the capital of France?",
                                      {"Paris is the capital of France."});
  CHECK(cwu::mock_extractive_answer(p) == "Paris is the capital of France.");
}

TEST_CASE("mock falls back without context", "[llm]") {
  const auto p = cwu::assemble_prompt("Anything?", {});
  CHECK(cwu::mock_extractive_answer(p) == "I don't know.");
}

TEST_CASE("mock finds a planted sentence among distractors", "[llm]") {
  std::mt19937 rng(13);
  const std::vector<std::string> filler = {
      "gravel", "spoon", "lantern", "marble", "willow", "copper",
      "basket", "meadow", "anchor", "violet", "timber", "harbor"};
  std::uniform_int_distribution<std::size_t> wi(0, filler.size() - 1);

  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::string> sentences;
    for (int i = 0; i < 50; ++i) {
      std::string s;
      for (int w = 0; w < 8; ++w) {
        if (w) s += ' ';
        s += filler[wi(rng)];
      }
      s += '.';
      sentences.push_back(std::move(s));
    }
    // Planted sentence shares >= 3 distinctive words with the question.
    const std::string planted =
        "The zephyr beacon stores the crimson artifact safely.";
    const std::string question =
        "Where does the zephyr beacon keep the crimson artifact?";
    std::uniform_int_distribution<std::size_t> pos(0, sentences.size());
    sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(pos(rng)), planted);

    // Split the sentences across a few chunks.
    std::vector<std::string> chunks;
    std::string current;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      if (!current.empty()) current += ' ';
      current += sentences[i];
      if (i % 10 == 9) {
        chunks.push_back(current);
        current.clear();
      }
    }
    if (!current.empty()) chunks.push_back(current);

    const auto p = cwu::assemble_prompt(question, chunks);
    CHECK(cwu::mock_extractive_answer(p) == planted);
  }
}

TEST_CASE("mock tie-break picks the earliest sentence", "[llm]") {
  // Two sentences with identical overlap; the first in chunk order wins.
  const auto p = cwu::assemble_prompt(
      "token?", {"Unrelated words entirely. Another unrelated sentence."});
  const auto ans = cwu::mock_extractive_answer(p);
  CHECK(ans == "Unrelated words entirely.");
}

TEST_CASE("mock determinism", "[llm]") {
  const auto p = cwu::assemble_prompt("What color is the sky?",
                                      {"The sky is blue. Grass is green."});
  const auto a = cwu::mock_extractive_answer(p);
  const auto b = cwu::mock_extractive_answer(p);
  CHECK(a == b);
  CHECK(a == "The sky is blue.");
}
