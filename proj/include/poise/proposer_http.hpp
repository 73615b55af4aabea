// Copyright 2026 The Poise Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// HTTP proposer transport (POST to a configured URL). Kept in its own
// header so only endpoints that need it pay for the HTTP library.

#ifndef POISE_PROPOSER_HTTP_HPP_
#define POISE_PROPOSER_HTTP_HPP_

#include <string>

#include <httplib.h>

#include "poise/proposal.hpp"

namespace poise {

class HttpProposer : public ProposerTransport {
 public:
  // Accepts "http://host:port/path"; the path defaults to /propose.
  explicit HttpProposer(const std::string& url) {
    std::string rest = url;
    const std::string scheme = "http://";
    require(rest.rfind(scheme, 0) == 0, "HttpProposer: only http:// URLs supported");
    rest = rest.substr(scheme.size());
    const auto slash = rest.find('/');
    host_port_ = "http://" + (slash == std::string::npos ? rest : rest.substr(0, slash));
    path_ = slash == std::string::npos ? "/propose" : rest.substr(slash);
  }

  std::string exchange(const std::string& request_line) override {
    httplib::Client client(host_port_);
    client.set_connection_timeout(5);
    client.set_read_timeout(30);
    auto res = client.Post(path_, request_line, "application/json");
    if (!res) throw PoiseError("proposer http: transport failure");
    require(res->status == 200,
            "proposer http: status " + std::to_string(res->status));
    return res->body;
  }

 private:
  std::string host_port_;
  std::string path_;
};

}  // namespace poise

#endif  // POISE_PROPOSER_HTTP_HPP_
