# Тесты движка тензорного исчисления Финслера
