#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "confidant/pipeline.hpp"

namespace confidant::testing {

inline std::string fixture(const std::string& name) {
    return std::string(CONFIDANT_TEST_FIXTURES) + "/" + name;
}

inline std::string data_file(const std::string& name) {
    return pipeline::default_data_dir() + "/data/" + name;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("confidant-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

// Shipped gazetteer, pools and templates with the echo mock as the model.
inline pipeline::EngineResources echo_resources(std::shared_ptr<llm::LlmProvider> model = nullptr) {
    auto r = pipeline::load_default_resources();
    r.llm = model ? std::move(model) : std::shared_ptr<llm::LlmProvider>(llm::mock::make_echo_llm());
    return r;
}

}  // namespace confidant::testing

#define CHECK_THROWS_CODE(expr, ec)                                                         \
    do {                                                                                    \
        try {                                                                               \
            (void)(expr);                                                                   \
            FAIL_CHECK("no exception, expected " << ::confidant::to_string(ec));            \
        } catch (const ::confidant::Error& e_) {                                            \
            CHECK(::confidant::to_string(e_.code()) == ::confidant::to_string(ec));         \
        }                                                                                   \
    } while (0)
