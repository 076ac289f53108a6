#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <stdexcept>
#include <thread>

#include "httplib.h"
#include "ravenkit/harness.hpp"
#include "ravenkit/rng.hpp"

namespace ravenkit {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::optional<std::size_t> scan_for_letters(const std::string& text,
                                            const std::vector<std::string>& letters,
                                            bool lowercase) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    for (std::size_t li = 0; li < letters.size(); ++li) {
      const std::string& letter = letters[li];
      if (letter.size() != 1) continue;
      char want = letter[0];
      if (lowercase && want >= 'A' && want <= 'Z') want = static_cast<char>(want - 'A' + 'a');
      if (text[i] != want) continue;
      bool left_ok = i == 0 || !word_char(text[i - 1]);
      bool right_ok = i + 1 >= text.size() || !word_char(text[i + 1]);
      if (left_ok && right_ok) return li;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> parse_letter(const std::string& raw_text,
                                        const std::vector<std::string>& letters) {
  // Drop echoes of the closing instruction so its own letter list is ignored.
  static const std::regex kInstruction("The answer should be one of[^.]*\\.?");
  std::string text = std::regex_replace(raw_text, kInstruction, " ");
  if (auto idx = scan_for_letters(text, letters, false)) return letters[*idx];
  if (auto idx = scan_for_letters(text, letters, true)) return letters[*idx];
  return std::nullopt;
}

ParsedAnswer parse_reply(const ModelReply& reply, const std::vector<std::string>& letters) {
  ParsedAnswer out;
  std::size_t k = letters.size();
  if (k == 0) throw std::invalid_argument("parse_reply: no letters");

  if (!reply.letter_logits.empty()) {
    std::vector<double> logits(k, 0.0);
    std::vector<bool> present(k, false);
    double lowest = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < k; ++i) {
      auto it = reply.letter_logits.find(letters[i]);
      if (it == reply.letter_logits.end()) continue;
      logits[i] = it->second;
      present[i] = true;
      lowest = any ? std::min(lowest, it->second) : it->second;
      any = true;
    }
    if (any) {
      for (std::size_t i = 0; i < k; ++i) {
        if (!present[i]) logits[i] = lowest - 30.0;
      }
      out.probs = softmax(logits);
      out.chosen = argmax_index(out.probs);
      return out;
    }
  }

  if (auto letter = parse_letter(reply.raw_text, letters)) {
    out.probs.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      if (letters[i] == *letter) {
        out.probs[i] = 1.0;
        out.chosen = i;
        break;
      }
    }
    return out;
  }

  out.probs.assign(k, 1.0 / static_cast<double>(k));
  out.chosen = 0;
  out.degenerate = true;
  return out;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  static const char* kTable =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
    if (i + 2 < bytes.size()) chunk |= static_cast<std::uint32_t>(bytes[i + 2]);
    out += kTable[(chunk >> 18) & 63];
    out += kTable[(chunk >> 12) & 63];
    out += i + 1 < bytes.size() ? kTable[(chunk >> 6) & 63] : '=';
    out += i + 2 < bytes.size() ? kTable[chunk & 63] : '=';
  }
  return out;
}

ModelReply UniformAdapter::answer(const std::vector<std::uint8_t>&, const std::string&,
                                  const std::vector<std::string>& letters,
                                  const QueryContext&) {
  ModelReply reply;
  for (const std::string& letter : letters) reply.letter_logits[letter] = 0.0;
  return reply;
}

ModelReply OracleAdapter::answer(const std::vector<std::uint8_t>&, const std::string&,
                                 const std::vector<std::string>& letters,
                                 const QueryContext& ctx) {
  ModelReply reply;
  double k = static_cast<double>(letters.size());
  double gt_logit;
  if (p_ >= 1.0 - 1e-15) {
    gt_logit = 1000.0;
  } else if (p_ <= 1e-15) {
    gt_logit = -1000.0;
  } else {
    gt_logit = std::log(p_ * (k - 1.0) / (1.0 - p_));
  }
  for (const std::string& letter : letters) {
    reply.letter_logits[letter] = letter == ctx.gt_label ? gt_logit : 0.0;
  }
  reply.raw_text = ctx.gt_label;
  return reply;
}

ModelReply RandomAdapter::answer(const std::vector<std::uint8_t>&, const std::string& prompt,
                                 const std::vector<std::string>& letters,
                                 const QueryContext& ctx) {
  std::string identity = ctx.item_id + "|" + ctx.dep_id + "|" + ctx.dep_answer;
  Rng rng(derive_seed(seed_, fnv1a64(identity) ^ fnv1a64(prompt)));
  const std::string& letter =
      letters[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(letters.size()) - 1))];
  ModelReply reply;
  reply.raw_text = "The answer is " + letter + ".";
  return reply;
}

std::string ScriptedAdapter::key(const std::string& item_id, const std::string& dep_id,
                                 const std::string& dep_answer) {
  return item_id + "|" + dep_id + "|" + dep_answer;
}

ModelReply ScriptedAdapter::reply_for_probs(const std::vector<std::string>& letters,
                                            const std::vector<double>& probs) {
  if (letters.size() != probs.size()) {
    throw std::invalid_argument("reply_for_probs: mismatched lengths");
  }
  ModelReply reply;
  for (std::size_t i = 0; i < letters.size(); ++i) {
    reply.letter_logits[letters[i]] = probs[i] > 0.0 ? std::log(probs[i]) : -1000.0;
  }
  return reply;
}

void ScriptedAdapter::script(const std::string& key, ModelReply reply) {
  replies_[key] = std::move(reply);
}

ModelReply ScriptedAdapter::answer(const std::vector<std::uint8_t>&, const std::string&,
                                   const std::vector<std::string>& letters,
                                   const QueryContext& ctx) {
  auto it = replies_.find(key(ctx.item_id, ctx.dep_id, ctx.dep_answer));
  if (it != replies_.end()) return it->second;
  ModelReply reply;
  for (const std::string& letter : letters) reply.letter_logits[letter] = 0.0;
  return reply;
}

ModelReply InstrumentedAdapter::answer(const std::vector<std::uint8_t>& image_png,
                                       const std::string& prompt,
                                       const std::vector<std::string>& letters,
                                       const QueryContext& ctx) {
  int now = in_flight_.fetch_add(1) + 1;
  int seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  total_.fetch_add(1);
  {
    std::lock_guard<std::mutex> lock(mu_);
    per_item_[ctx.item_id] += 1;
  }
  ModelReply reply = inner_.answer(image_png, prompt, letters, ctx);
  in_flight_.fetch_sub(1);
  return reply;
}

int InstrumentedAdapter::calls_for(const std::string& item_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = per_item_.find(item_id);
  return it == per_item_.end() ? 0 : it->second;
}

std::string RecordingAdapter::key(const QueryContext& ctx, const std::string& prompt) {
  return ctx.item_id + "|" + ctx.dep_id + "|" + ctx.dep_answer + "|" + hex64(fnv1a64(prompt));
}

ModelReply RecordingAdapter::answer(const std::vector<std::uint8_t>& image_png,
                                    const std::string& prompt,
                                    const std::vector<std::string>& letters,
                                    const QueryContext& ctx) {
  ModelReply reply = inner_.answer(image_png, prompt, letters, ctx);
  std::lock_guard<std::mutex> lock(mu_);
  log_[key(ctx, prompt)] = reply;
  return reply;
}

void RecordingAdapter::save(const std::string& path) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  Json header;
  header["adapter"] = inner_.name();
  out << header.dump() << "\n";
  for (const auto& [key, reply] : log_) {
    Json j;
    j["key"] = key;
    j["raw_text"] = reply.raw_text;
    j["letter_logits"] = reply.letter_logits;
    out << j.dump() << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

ReplayAdapter::ReplayAdapter(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open replay log " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line);
    if (!j.contains("key")) {
      if (j.contains("adapter")) name_ = j.at("adapter").get<std::string>();
      continue;
    }
    ModelReply reply;
    reply.raw_text = j.at("raw_text").get<std::string>();
    reply.letter_logits = j.at("letter_logits").get<std::map<std::string, double>>();
    log_[j.at("key").get<std::string>()] = std::move(reply);
  }
}

ModelReply ReplayAdapter::answer(const std::vector<std::uint8_t>&, const std::string& prompt,
                                 const std::vector<std::string>&, const QueryContext& ctx) {
  auto it = log_.find(RecordingAdapter::key(ctx, prompt));
  if (it == log_.end()) {
    throw std::runtime_error("replay log has no entry for " + RecordingAdapter::key(ctx, prompt));
  }
  return it->second;
}

HttpAdapter::HttpAdapter(HttpAdapterConfig config) : config_(std::move(config)) {
  const char* key = std::getenv("MODEL_API_KEY");
  if (key != nullptr) api_key_ = key;
}

ModelReply HttpAdapter::answer(const std::vector<std::uint8_t>& image_png,
                               const std::string& prompt,
                               const std::vector<std::string>& letters,
                               const QueryContext&) {
  Json content = Json::array();
  content.push_back(Json{{"type", "text"}, {"text", prompt}});
  content.push_back(Json{
      {"type", "image_url"},
      {"image_url", Json{{"url", "data:image/png;base64," + base64_encode(image_png)}}}});
  Json body;
  body["model"] = config_.model;
  body["temperature"] = config_.temperature;
  body["max_tokens"] = config_.max_tokens;
  body["logprobs"] = true;
  body["top_logprobs"] = config_.top_logprobs;
  body["messages"] = Json::array({Json{{"role", "user"}, {"content", content}}});
  std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt < std::max(1, config_.max_retries); ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(200 * attempt));
    }
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    try {
      Json j = Json::parse(res->body);
      const Json& choice = j.at("choices").at(0);
      ModelReply reply;
      reply.raw_text = choice.at("message").at("content").get<std::string>();
      if (choice.contains("logprobs") && choice.at("logprobs").is_object()) {
        const Json& tokens = choice.at("logprobs").value("content", Json::array());
        if (!tokens.empty() && tokens.at(0).contains("top_logprobs")) {
          for (const Json& cand : tokens.at(0).at("top_logprobs")) {
            std::string token = cand.at("token").get<std::string>();
            while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) {
              token.erase(token.begin());
            }
            for (const std::string& letter : letters) {
              if (token != letter) continue;
              double lp = cand.at("logprob").get<double>();
              auto it = reply.letter_logits.find(letter);
              if (it == reply.letter_logits.end() || it->second < lp) {
                reply.letter_logits[letter] = lp;
              }
            }
          }
        }
      }
      return reply;
    } catch (const std::exception& e) {
      last_error = std::string("bad response: ") + e.what();
    }
  }
  throw std::runtime_error("model endpoint failed after retries: " + last_error);
}

}  // namespace ravenkit
