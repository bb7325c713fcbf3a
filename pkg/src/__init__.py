# Движок тензорного исчисления Финслера для метрик m-Кропиной
