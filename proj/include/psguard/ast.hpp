#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace psguard {

/// A labeled PowerShell source. The text is only ever lexed, never run.
struct SourceScript {
    std::string id;
    std::string text;
    std::optional<int> label;  // 0 benign, 1 malicious
    std::string origin;
};

/// Half-open byte range [start, end) into the script text.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    [[nodiscard]] std::size_t size() const { return end - start; }
    [[nodiscard]] bool contains(const Span& other) const {
        return start <= other.start && other.end <= end;
    }
    friend bool operator==(const Span&, const Span&) = default;
};

enum class AstKind {
    ScriptRoot,
    PipelineAst,
    CommandAst,
    CmdletAst,
    CommandParameterAst,
    ArgumentAst,
    CommandExpressionAst,
    ExpressionAst,
    MethodInvocationAst,
    MethodNameAst,
    TypeNameAst,
    StringLiteralAst,
    VariableAst,
    AssignmentAst,
    ScriptBlockAst,
    IfAst,
    LoopAst,
    FunctionDefinitionAst,
    OperatorAst,
    ErrorAst,
};

inline constexpr std::size_t kAstKindCount = 20;

[[nodiscard]] std::string_view to_string(AstKind kind);
[[nodiscard]] std::optional<AstKind> ast_kind_from_string(std::string_view name);

struct AstNode {
    AstKind kind = AstKind::ScriptRoot;
    std::string text;
    Span span;
    std::vector<AstNode> children;

    [[nodiscard]] std::size_t node_count() const;
    friend bool operator==(const AstNode&, const AstNode&) = default;
};

/// Indented rendering, one node per line, `|   ` per depth level:
///
///     ScriptRoot
///     |   PipelineAst: ping -c 4
///     |   |   CommandAst: ping -c 4
///
/// Whitespace runs inside node text are collapsed to a single space.
[[nodiscard]] std::string dump_ast(const AstNode& root);

/// Pre-order sequence of node kinds, root included.
[[nodiscard]] std::vector<AstKind> kind_sequence(const AstNode& root);

}  // namespace psguard
