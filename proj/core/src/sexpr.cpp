#include "vqdd/sexpr.hpp"

#include "vqdd/errors.hpp"

namespace vqdd {

namespace {

struct Lexer {
    std::string_view text;
    std::size_t pos = 0;
    int line = 1;
    int column = 1;

    struct Token {
        enum class Kind { LParen, RParen, Atom, End } kind;
        std::string value;
        int line;
        int column;
    };

    void advance() {
        if (text[pos] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
        ++pos;
    }

    void skip_space_and_comments() {
        while (pos < text.size()) {
            const char c = text[pos];
            if (c == ';') {
                while (pos < text.size() && text[pos] != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else {
                break;
            }
        }
    }

    Token next() {
        skip_space_and_comments();
        if (pos >= text.size()) return {Token::Kind::End, "", line, column};
        const int tok_line = line;
        const int tok_column = column;
        const char c = text[pos];
        if (c == '(') {
            advance();
            return {Token::Kind::LParen, "(", tok_line, tok_column};
        }
        if (c == ')') {
            advance();
            return {Token::Kind::RParen, ")", tok_line, tok_column};
        }
        std::string value;
        while (pos < text.size()) {
            const char d = text[pos];
            if (d == '(' || d == ')' || d == ';' || d == ' ' || d == '\t' || d == '\r' ||
                d == '\n')
                break;
            value.push_back(d);
            advance();
        }
        return {Token::Kind::Atom, std::move(value), tok_line, tok_column};
    }
};

}  // namespace

std::vector<Sexpr> parse_sexprs(std::string_view text) {
    Lexer lexer{text};
    std::vector<Sexpr> roots;
    std::vector<Sexpr> stack;  // open lists, innermost last

    const auto emit = [&](Sexpr node) {
        if (stack.empty())
            roots.push_back(std::move(node));
        else
            stack.back().items.push_back(std::move(node));
    };

    for (;;) {
        Lexer::Token token = lexer.next();
        if (token.kind == Lexer::Token::Kind::End) break;

        if (token.kind == Lexer::Token::Kind::LParen) {
            Sexpr node;
            node.is_list = true;
            node.line = token.line;
            node.column = token.column;
            stack.push_back(std::move(node));
        } else if (token.kind == Lexer::Token::Kind::RParen) {
            if (stack.empty())
                throw ParseError("unmatched ')'", token.line, token.column);
            Sexpr done = std::move(stack.back());
            stack.pop_back();
            emit(std::move(done));
        } else {
            Sexpr node;
            node.atom = std::move(token.value);
            node.line = token.line;
            node.column = token.column;
            emit(std::move(node));
        }
    }

    if (!stack.empty())
        throw ParseError("unterminated '('", stack.back().line, stack.back().column);
    return roots;
}

}  // namespace vqdd
