"""
HTTP surface for repeated journey queries.

POST /plan takes newline-delimited JSON requests and answers with one JSON
line per request, in order. Each answer is the same payload ``bbtime plan
--json`` prints; a malformed line gets an error object and the rest of the
batch is still answered. POST /overlay appends annotation feed lines,
DELETE /overlay clears them (optionally for one hop).
"""
import json
import logging
import os
from typing import Any, Dict, Optional

from flask import Flask, Response, jsonify, request
from werkzeug.exceptions import BadRequest, HTTPException

from src.core.data_service import NetworkService, get_network_service
from src.core.errors import AmbiguousStationError, BBTimeError, ValidationError
from src.core.logging_setup import configure_logging
from src.core.path_manager import NETWORK_ENV_VAR

logger = logging.getLogger(__name__)

NDJSON = 'application/x-ndjson'


def _body_text() -> str:
    try:
        return request.get_data(as_text=False).decode('utf-8')
    except UnicodeDecodeError:
        raise BadRequest("Request body must be UTF-8")


def _error_payload(error: Exception, line: Optional[int] = None) -> Dict[str, Any]:
    payload: Dict[str, Any] = {'error': str(error)}
    if isinstance(error, AmbiguousStationError):
        payload['candidates'] = error.candidates
    if line is not None:
        payload['line'] = line
    return payload


def answer_line(service: NetworkService, text: str, line: Optional[int] = None) -> Dict[str, Any]:
    """Plan one request line; errors come back as payloads"""
    try:
        plan_request = json.loads(text)
    except json.JSONDecodeError as e:
        return _error_payload(ValidationError(f"Malformed JSON: {e.msg}"), line)
    if not isinstance(plan_request, dict):
        return _error_payload(ValidationError("A request must be a JSON object"), line)
    request_id = plan_request.pop('id', None)
    try:
        payload = service.plan_request(plan_request).to_dict()
    except BBTimeError as e:
        payload = _error_payload(e, line)
    if request_id is not None:
        payload['id'] = request_id
    return payload


def create_app(service: Optional[NetworkService] = None) -> Flask:
    """Flask app bound to a network service (the global one by default)"""
    app = Flask(__name__)
    app.config['MAX_CONTENT_LENGTH'] = 16 * 1024 * 1024  # 16MB max request
    data_service = service or get_network_service()
    app.config['NETWORK_SERVICE'] = data_service

    @app.route('/plan', methods=['POST'])
    def plan():
        """Answer a batch of newline-delimited plan requests"""
        if not data_service.is_loaded():
            return jsonify({'error': 'No network loaded'}), 400
        lines = []
        for number, text in enumerate(_body_text().splitlines(), start=1):
            if text.strip():
                payload = answer_line(data_service, text, number)
                lines.append(json.dumps(payload, sort_keys=True))
        body = "\n".join(lines) + ("\n" if lines else "")
        return Response(body, mimetype=NDJSON)

    @app.route('/overlay', methods=['POST'])
    def append_overlay():
        """Apply annotation feed lines"""
        if not data_service.is_loaded():
            return jsonify({'error': 'No network loaded'}), 400
        try:
            epoch = data_service.apply_annotations(_body_text().splitlines())
        except ValidationError as e:
            return jsonify(_error_payload(e)), 400
        return jsonify({'overlay_epoch': epoch})

    @app.route('/overlay', methods=['DELETE'])
    def clear_overlay():
        """Clear annotations, all of them or those of ?hop_id="""
        if not data_service.is_loaded():
            return jsonify({'error': 'No network loaded'}), 400
        hop_id = request.args.get('hop_id', type=int)
        return jsonify({'overlay_epoch': data_service.clear_annotations(hop_id)})

    @app.route('/api/status')
    def get_status():
        """Get current service status"""
        return jsonify(data_service.get_data_info())

    @app.errorhandler(ValidationError)
    def validation_error(error):
        return jsonify(_error_payload(error)), 400

    @app.errorhandler(HTTPException)
    def http_error(error):
        """Keep HTTP errors in JSON"""
        return jsonify({'error': error.description or error.name}), error.code

    @app.errorhandler(500)
    def internal_error(error):
        """Handle internal server errors"""
        logger.error("Unhandled error: %s", getattr(error, 'original_exception', error))
        return jsonify({'error': 'Internal server error'}), 500

    return app


if __name__ == '__main__':
    configure_logging()
    network_service = get_network_service()
    network_service.load(os.environ[NETWORK_ENV_VAR])
    create_app(network_service).run(
        host='127.0.0.1',
        port=int(os.environ.get('BBTIME_PORT', '8765')),
        threaded=True,
        use_reloader=False
    )
