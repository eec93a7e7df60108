#include "morder/counts.hpp"

#include <array>
#include <cstring>
#include <istream>
#include <ostream>

#include "morder/error.hpp"

namespace morder {

CountTable::CountTable(std::uint64_t key_space)
    : key_space_(key_space), dense_(key_space <= kDenseLimit) {
    if (dense_) values_.assign(key_space, 0);
}

std::uint64_t CountTable::get(std::uint64_t key) const {
    if (key >= key_space_) throw InvalidArgument("count key outside the table");
    if (dense_) return values_[key];
    const auto it = sparse_.find(key);
    return it == sparse_.end() ? 0 : it->second;
}

void CountTable::increment(std::uint64_t key) {
    if (dense_) {
        ++values_[key];
    } else {
        ++sparse_[key];
    }
}

void CountTable::set(std::uint64_t key, std::uint64_t count) {
    if (key >= key_space_) throw InvalidArgument("count key outside the table");
    if (dense_) {
        values_[key] = count;
    } else if (count == 0) {
        sparse_.erase(key);
    } else {
        sparse_[key] = count;
    }
}

bool CountTable::operator==(const CountTable& other) const {
    return key_space_ == other.key_space_ && dense_ == other.dense_ && values_ == other.values_ &&
           sparse_ == other.sparse_;
}

ContextCounts::ContextCounts(std::uint32_t alphabet_size, std::uint32_t depth_cap)
    : m_(alphabet_size), depth_(depth_cap) {
    if (alphabet_size < 2) throw InvalidArgument("alphabet size must be at least 2");
    checked_pow(alphabet_size, depth_cap + 1);
    for (std::uint32_t r = 0; r <= depth_cap; ++r) {
        sizes_.push_back(checked_pow(alphabet_size, r));
        contexts_.emplace_back(sizes_.back());
        transitions_.emplace_back(sizes_.back() * alphabet_size);
    }
    current_.assign(depth_cap + 1, 0);
}

std::uint64_t ContextCounts::context_count(std::uint32_t r, std::uint64_t context) const {
    return contexts(r).get(context);
}

std::uint64_t ContextCounts::transition_count(std::uint32_t r, std::uint64_t context, Symbol b) const {
    if (b >= m_) throw InvalidArgument("symbol outside the alphabet");
    return transitions(r).get(context * m_ + b);
}

const CountTable& ContextCounts::contexts(std::uint32_t r) const {
    if (r > depth_) throw InvalidArgument("order exceeds the depth cap");
    return contexts_[r];
}

const CountTable& ContextCounts::transitions(std::uint32_t r) const {
    if (r > depth_) throw InvalidArgument("order exceeds the depth cap");
    return transitions_[r];
}

void ContextCounts::append(Symbol s) {
    if (s >= m_) throw InvalidArgument("symbol outside the alphabet");
    const std::uint64_t top = std::min<std::uint64_t>(depth_, n_);
    for (std::uint32_t r = 0; r <= top; ++r) {
        contexts_[r].increment(current_[r]);
        transitions_[r].increment(current_[r] * m_ + s);
    }
    for (std::uint32_t r = 0; r <= depth_; ++r) current_[r] = (current_[r] * m_ + s) % sizes_[r];
    if (depth_ > 0) {
        if (tail_.size() == depth_) tail_.erase(tail_.begin());
        tail_.push_back(s);
    }
    ++n_;
}

void ContextCounts::append(std::span<const Symbol> symbols) {
    for (Symbol s : symbols) {
        if (s >= m_) throw InvalidArgument("symbol outside the alphabet");
    }
    for (Symbol s : symbols) append(s);
}

bool ContextCounts::operator==(const ContextCounts& other) const {
    return m_ == other.m_ && depth_ == other.depth_ && n_ == other.n_ && tail_ == other.tail_ &&
           current_ == other.current_ && contexts_ == other.contexts_ && transitions_ == other.transitions_;
}

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'O', 'R', 'D', 'C', 'N', 'T', 0};
constexpr std::uint32_t kFormatVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
    std::array<char, sizeof(T)> buf{};
    for (std::size_t k = 0; k < sizeof(T); ++k) buf[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
    out.write(buf.data(), buf.size());
}

template <class T>
T get(std::istream& in) {
    std::array<unsigned char, sizeof(T)> buf{};
    in.read(reinterpret_cast<char*>(buf.data()), buf.size());
    if (!in) throw ParseError("counts file: truncated");
    T v = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) v |= static_cast<T>(buf[k]) << (8 * k);
    return v;
}

void put_table(std::ostream& out, const CountTable& t) {
    std::uint64_t nonzero = 0;
    t.for_each_nonzero([&](std::uint64_t, std::uint64_t) { ++nonzero; });
    put<std::uint64_t>(out, nonzero);
    t.for_each_nonzero([&](std::uint64_t k, std::uint64_t v) {
        put<std::uint64_t>(out, k);
        put<std::uint64_t>(out, v);
    });
}

void get_table(std::istream& in, CountTable& t) {
    const auto entries = get<std::uint64_t>(in);
    for (std::uint64_t e = 0; e < entries; ++e) {
        const auto k = get<std::uint64_t>(in);
        const auto v = get<std::uint64_t>(in);
        if (k >= t.key_space()) throw ParseError("counts file: key outside table");
        t.set(k, v);
    }
}

}  // namespace

void ContextCounts::save(std::ostream& out) const {
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kFormatVersion);
    put<std::uint32_t>(out, m_);
    put<std::uint32_t>(out, depth_);
    put<std::uint32_t>(out, 0);
    put<std::uint64_t>(out, n_);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tail_.size()));
    for (Symbol s : tail_) put<std::uint32_t>(out, s);
    for (std::uint32_t r = 0; r <= depth_; ++r) {
        put_table(out, contexts_[r]);
        put_table(out, transitions_[r]);
    }
}

ContextCounts ContextCounts::load(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw ParseError("counts file: bad magic");
    if (get<std::uint32_t>(in) != kFormatVersion) throw ParseError("counts file: unsupported version");
    const auto m = get<std::uint32_t>(in);
    const auto depth = get<std::uint32_t>(in);
    get<std::uint32_t>(in);
    ContextCounts counts(m, depth);
    counts.n_ = get<std::uint64_t>(in);
    const auto tail_len = get<std::uint32_t>(in);
    if (tail_len != std::min<std::uint64_t>(depth, counts.n_)) throw ParseError("counts file: bad tail");
    for (std::uint32_t k = 0; k < tail_len; ++k) {
        const auto s = get<std::uint32_t>(in);
        if (s >= m) throw ParseError("counts file: tail symbol outside the alphabet");
        counts.tail_.push_back(s);
    }
    for (std::uint32_t r = 0; r <= depth; ++r) {
        const std::size_t take = std::min<std::size_t>(r, counts.tail_.size());
        counts.current_[r] = encode_context(std::span<const Symbol>(counts.tail_).last(take), m);
        get_table(in, counts.contexts_[r]);
        get_table(in, counts.transitions_[r]);
    }
    return counts;
}

ContextCounts build_counts(std::span<const Symbol> path, std::uint32_t alphabet_size,
                           std::uint32_t depth_cap) {
    if (depth_cap >= path.size()) throw InvalidArgument("depth cap must be below the path length");
    ContextCounts counts(alphabet_size, depth_cap);
    counts.append(path);
    return counts;
}

ContextCounts extend_counts(ContextCounts counts, std::span<const Symbol> new_symbols) {
    counts.append(new_symbols);
    return counts;
}

}  // namespace morder
