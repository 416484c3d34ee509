#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace test_support {

// Unique scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        std::uniform_int_distribution<unsigned long long> dist;
        path_ = std::filesystem::temp_directory_path() /
                ("smartsvm_test_" + std::to_string(dist(rd)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

    void write(const std::string& name, const std::string& content) const {
        std::ofstream f(path_ / name, std::ios::binary);
        f << content;
    }

    std::string read(const std::string& name) const {
        std::ifstream f(path_ / name, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    }

private:
    std::filesystem::path path_;
};

}  // namespace test_support
