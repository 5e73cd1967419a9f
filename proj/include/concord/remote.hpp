#pragma once
// Remote comparator speaking a chat-completion-style HTTP JSON protocol.
// Transport failures retry with backoff up to the configured count and
// then surface as TransportError; an unparseable completion is retried
// once and then recorded as an abstention. Raw transcripts can be
// appended to a JSONL audit file.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "concord/comparator.hpp"
#include "concord/core.hpp"

namespace concord {

struct RemoteModelConfig {
  std::string endpoint = "http://localhost:8080/v1/chat/completions";
  std::string model = "default";
  double temperature = 0.0;           // direct judgments
  double sampling_temperature = 0.7;  // self-agreement resampling
  int max_tokens = 256;
  int retry_count = 2;          // extra attempts after the first
  double timeout_seconds = 60.0;
  std::string credential_env = "CONCORD_API_KEY";
  int max_concurrency = 4;      // in-flight request limit
};

inline void validate(const RemoteModelConfig& c) {
  if (c.temperature < 0.0 || c.sampling_temperature < 0.0)
    throw ValidationError("remote config: temperatures must be >= 0");
  if (c.retry_count < 0) throw ValidationError("remote config: retry_count must be >= 0");
  if (c.max_tokens < 1) throw ValidationError("remote config: max_tokens must be >= 1");
  if (c.max_concurrency < 1) throw ValidationError("remote config: max_concurrency must be >= 1");
  if (c.endpoint.rfind("http://", 0) != 0 && c.endpoint.rfind("https://", 0) != 0)
    throw ValidationError("remote config: endpoint must be an http(s) URL");
}

namespace detail {

struct ParsedUrl {
  std::string host_and_scheme;  // e.g. "http://localhost:8080"
  std::string path;             // e.g. "/v1/chat/completions"
};

inline ParsedUrl parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  if (path_start == std::string::npos) {
    p.host_and_scheme = url;
    p.path = "/";
  } else {
    p.host_and_scheme = url.substr(0, path_start);
    p.path = url.substr(path_start);
  }
  return p;
}

}  // namespace detail

class RemoteComparator : public Comparator {
 public:
  RemoteComparator(RemoteModelConfig cfg, PromptTemplate direct_template,
                   PromptTemplate cot_template, bool use_chain_of_thought = false,
                   std::string audit_path = "")
      : cfg_(std::move(cfg)),
        direct_(std::move(direct_template)),
        cot_(std::move(cot_template)),
        use_cot_(use_chain_of_thought),
        audit_path_(std::move(audit_path)),
        slots_(cfg_.max_concurrency) {
    validate(cfg_);
    validate(direct_);
    validate(cot_);
    url_ = detail::parse_url(cfg_.endpoint);
    if (!cfg_.credential_env.empty()) {
      if (const char* key = std::getenv(cfg_.credential_env.c_str())) api_key_ = key;
    }
  }

  static RemoteComparator with_default_templates(RemoteModelConfig cfg, bool use_chain_of_thought = false,
                                                 std::string audit_path = "") {
    return RemoteComparator(std::move(cfg), PromptTemplate::direct_default(),
                            PromptTemplate::chain_of_thought_default(), use_chain_of_thought,
                            std::move(audit_path));
  }

  Judgment compare(const std::string& context, const Item& first, const Item& second,
                   const RelationSpec& relation, bool negated) override {
    return run(context, first, second, relation, negated, cfg_.temperature);
  }

  Judgment compare_sampled(const std::string& context, const Item& first, const Item& second,
                           const RelationSpec& relation, bool negated, int) override {
    return run(context, first, second, relation, negated, cfg_.sampling_temperature);
  }

 private:
  Judgment run(const std::string& context, const Item& first, const Item& second,
               const RelationSpec& relation, bool negated, double temperature) {
    const PromptTemplate& tmpl = use_cot_ ? cot_ : direct_;
    const std::string& statement = negated ? relation.negated_statement : relation.statement;
    std::string prompt = tmpl.render(context, first.text, second.text, statement);

    Judgment j;
    j.left = first.id;
    j.right = second.id;
    j.negated = negated;

    // One extra round-trip when the completion parses to no label.
    for (int parse_attempt = 0; parse_attempt < 2; ++parse_attempt) {
      std::string completion = complete_with_retries(prompt, temperature);
      audit(first.id, second.id, negated, prompt, completion);
      Winner w = parse_choice(completion, tmpl.answer_labels, tmpl.mode);
      if (w != Winner::Abstain || parse_attempt == 1) {
        j.winner = w;
        j.raw_output = completion;
        return j;
      }
    }
    return j;  // unreachable
  }

  std::string complete_with_retries(const std::string& prompt, double temperature) {
    nlohmann::json body;
    body["model"] = cfg_.model;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = temperature;
    body["max_tokens"] = cfg_.max_tokens;
    const std::string payload = body.dump();

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= cfg_.retry_count; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(100ll << std::min(attempt - 1, 6)));
      slots_.acquire();
      httplib::Result res = [&] {
        httplib::Client client(url_.host_and_scheme);
        client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_seconds));
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        return client.Post(url_.path, headers, payload, "application/json");
      }();
      slots_.release();

      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) {
        try {
          auto parsed = nlohmann::json::parse(res->body);
          return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const std::exception& e) {
          last_error = std::string("malformed response body: ") + e.what();
          continue;
        }
      }
      last_error = "HTTP " + std::to_string(res->status);
      if (res->status != 408 && res->status != 429 && res->status < 500)
        break;  // client errors will not improve on retry
    }
    throw TransportError("remote comparator: " + last_error);
  }

  void audit(const std::string& left, const std::string& right, bool negated,
             const std::string& prompt, const std::string& completion) {
    if (audit_path_.empty()) return;
    nlohmann::json rec{{"model", cfg_.model}, {"left", left},        {"right", right},
                       {"negated", negated},  {"prompt", prompt},    {"completion", completion}};
    std::lock_guard<std::mutex> lock(audit_mutex_);
    std::ofstream out(audit_path_, std::ios::app);
    out << rec.dump() << '\n';
  }

  RemoteModelConfig cfg_;
  PromptTemplate direct_;
  PromptTemplate cot_;
  bool use_cot_;
  std::string audit_path_;
  detail::ParsedUrl url_;
  std::string api_key_;
  std::counting_semaphore<256> slots_;
  std::mutex audit_mutex_;
};

}  // namespace concord
