#include <qdbench/digest.hpp>

#include <array>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <openssl/evp.h>

namespace qdbench {

namespace {
    struct MdCtxDeleter {
        void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
    };
    using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

    MdCtx new_context()
    {
        MdCtx ctx(EVP_MD_CTX_new());
        if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("sha256: cannot initialise digest");
        return ctx;
    }

    std::string finish(EVP_MD_CTX* ctx)
    {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx, md.data(), &len) != 1)
            throw std::runtime_error("sha256: digest failed");
        static constexpr char hex[] = "0123456789abcdef";
        std::string out;
        out.reserve(2 * len);
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(hex[md[i] >> 4]);
            out.push_back(hex[md[i] & 0xF]);
        }
        return out;
    }
} // namespace

std::string sha256_hex(std::string_view bytes)
{
    auto ctx = new_context();
    EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size());
    return finish(ctx.get());
}

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("sha256: cannot open '" + path.string() + "'");
    auto ctx = new_context();
    std::array<char, 1 << 16> buffer{};
    while (in) {
        in.read(buffer.data(), buffer.size());
        if (in.gcount() > 0)
            EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
    }
    if (in.bad())
        throw std::runtime_error("sha256: read failed for '" + path.string() + "'");
    return finish(ctx.get());
}

} // namespace qdbench
