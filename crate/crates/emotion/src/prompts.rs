//! Prompt texts and templates of the emotion-inference protocol.

/// Instruction sent ahead of a serialized transcript to hide outcome and identity cues.
pub const MASKING_PROMPT: &str = r#"You are a professional text encryption expert. You will need to process the following text so that any information related to the outcome of the game and the player's identity is hidden within the text.
1) Please replace the text that needs to be hidden with [MASK].
2) Please process each sentence separately and output each sentence after hiding the key information according to the original format.
3) As an expert, you will not only hide information that directly reveals "game results and player identity and emotions", but also hide clues that may reveal information, such as some emotion-related descriptors, or about some in-game situations).
The text you're dealing with is a post-match interview between a player and a reporter, a conversation between two people. Please organize the output into a Markdown table. The first column is the timestamp and the second column is the text behind the hidden information.
Every sentence must be strictly hidden, and words that may reveal the game situation in questions asked by reporters also need to be hidden. For example, words such as congratulations, winner, etc."#;

/// Instruction sent ahead of the masked transcript and the micro-gesture log.
pub const INFERENCE_PROMPT: &str = r#"Below, I will send you the transcription of a post-match interview with an athlete, along with their micro-gestures during this process. Both types of information include timestamps, so you can match them up. First, please analyze only the text to determine the outcome of the athlete's performance in the match. Then, integrate the text with the micro-gesture information to analyze the outcome of the athlete's performance in the match. Please output the results in the following format: text-only: win: confidence score, lose: confidence score. text+micro-gestures: win: confidence score, lose: confidence score. Please indicate to what extent you think the athlete lost/won, and ensure that the sum of the confidence levels is 100 in both text-only and text+micro-gestures. When adding micro-gestures to the analysis, if clues indicate that the inference is contrary to the analysis using only text, please output it truthfully. You don't need to keep the results consistent between text-only analysis and micro-gesture analysis. Please do not output anything else."#;

/// Prior-knowledge probe for one micro-gesture; `{Micro-Gesture}` is the slot.
pub const MG_EMOTION_TEMPLATE: &str = "What emotion do you think the {Micro-Gesture} below represents?";

/// Prior-knowledge probe for a match outcome.
pub const MATCH_WINNER_TEMPLATE: &str = "In the {Man's/Women's Singles} {Number}st Round of the {Year} {Match Name}, the match between {Player 1} and {Player 2}, who is the winner? A. {Player 1}; B. {Player 2}";
